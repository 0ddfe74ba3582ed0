//! File output helpers: atomic writes and gnuplot companions.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Writes `contents` to `dir/name` via a temporary file and rename, so a
/// crash mid-write never leaves a truncated artifact behind.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let target = dir.join(name);
    let staging = dir.join(format!(".{name}.tmp"));
    fs::write(&staging, contents)?;
    fs::rename(&staging, &target)?;
    Ok(target)
}

pub fn format_csv(header: &str, rows: &[Vec<f64>]) -> String {
    let mut out = String::with_capacity(32 * (rows.len() + 1));
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let mut first = true;
        for value in row {
            if !first {
                out.push(',');
            }
            out.push_str(&format!("{value:.8e}"));
            first = false;
        }
        out.push('\n');
    }
    out
}

pub fn statics_plot() -> &'static str {
    "set datafile separator ','\n\
     set xlabel 'tuning (half-widths)'\n\
     set ylabel '|force| (N), |spring| (N/m)'\n\
     set logscale y\n\
     plot 'statics.csv' using 1:(abs(column(2))) with lines title 'static force', \\\n\
     \x20    'statics.csv' using 1:(abs(column(3))) with lines title 'static spring'\n"
}

pub fn poles_plot() -> &'static str {
    "set datafile separator ','\n\
     set logscale x\n\
     set xlabel 'tuning (half-widths)'\n\
     set ylabel 'pole frequency (Hz)'\n\
     plot 'poles.csv' using 1:4:(strcol(6) eq 'true' ? 1 : 2) with points pt 7 lc variable \\\n\
     \x20    title 'poles (1 stable, 2 unstable)'\n"
}

pub fn bode_plot() -> &'static str {
    "set datafile separator ','\n\
     set logscale x\n\
     set xlabel 'frequency (Hz)'\n\
     set ylabel 'magnitude (dB re 1 uW/N)'\n\
     set y2label 'phase (deg)'\n\
     set ytics nomirror\n\
     set y2tics\n\
     plot 'bode.csv' using 1:2 with lines title 'magnitude', \\\n\
     \x20    'bode.csv' using 1:3 axes x1y2 with lines title 'phase'\n"
}

pub fn noise_plot() -> &'static str {
    "set datafile separator ','\n\
     set logscale xy\n\
     set xlabel 'frequency (Hz)'\n\
     set ylabel 'rms strain in a one-cycle band'\n\
     plot 'noise.csv' using 1:2 with lines title 'total', \\\n\
     \x20    'noise.csv' using 1:3 with lines title 'process', \\\n\
     \x20    'noise.csv' using 1:4 with lines title 'measurement', \\\n\
     \x20    'noise.csv' using 1:5 with lines title 'sprung limit', \\\n\
     \x20    'noise.csv' using 1:6 with lines title 'free-mass limit'\n"
}

pub fn simulate_plot() -> &'static str {
    "set datafile separator ','\n\
     set logscale xy\n\
     set xlabel 'frequency (Hz)'\n\
     set ylabel 'signal PSD (1/s^2 per Hz)'\n\
     plot 'simulate.csv' using 1:2 with lines title 'analytic', \\\n\
     \x20    'simulate.csv' using 1:3:4 with yerrorbars pt 6 title 'simulated'\n"
}
