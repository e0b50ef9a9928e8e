//! Trajectory and table CSV writers. Floats carry 17 significant digits so
//! every f64 round-trips.

use std::io::{self, Write};

use nussbaum_pi::Trajectory;

pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// `t,x,y,z_or_zeta,u` plus `S` and `q` when the run has them.
pub fn trajectory_header(tr: &Trajectory) -> String {
    let mut h = String::from("t,x,y,z_or_zeta,u");
    if tr.has_s() {
        h.push_str(",S");
    }
    if tr.has_q() {
        h.push_str(",q");
    }
    h
}

pub fn write_trajectory<W: Write>(mut w: W, tr: &Trajectory) -> io::Result<()> {
    writeln!(w, "{}", trajectory_header(tr))?;
    let mut line = String::with_capacity(160);
    for s in &tr.samples {
        line.clear();
        for v in [s.t, s.x, s.y, s.w, s.u] {
            if !line.is_empty() {
                line.push(',');
            }
            line.push_str(&fmt17(v));
        }
        for v in [s.s, s.q].into_iter().flatten() {
            line.push(',');
            line.push_str(&fmt17(v));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()
}

/// Quotes a text field if it contains a separator, quote or newline.
pub fn text_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
