//! Trajectory CSV files and the SVG plots drawn from them.

use std::fmt::Write as _;
use std::io;

use affsurf::ode::Sample;

/// Write samples as CSV with header `t,x1,x2` or `t,x1,x2,v1,v2`.
pub fn write_csv<W: io::Write>(out: W, samples: &[Sample], with_velocity: bool) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if with_velocity {
        w.write_record(["t", "x1", "x2", "v1", "v2"])?;
    } else {
        w.write_record(["t", "x1", "x2"])?;
    }
    for s in samples {
        let mut row = vec![s.t, s.y[0], s.y[1]];
        if with_velocity {
            row.extend([s.y[2], s.y[3]]);
        }
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(samples: &[Sample], with_velocity: bool) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, samples, with_velocity).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

#[derive(Debug)]
pub enum PlotError {
    Csv(csv::Error),
    Format(String),
}

impl std::fmt::Display for PlotError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlotError::Csv(e) => write!(f, "{e}"),
            PlotError::Format(m) => write!(f, "{m}"),
        }
    }
}

impl From<csv::Error> for PlotError {
    fn from(e: csv::Error) -> Self {
        PlotError::Csv(e)
    }
}

/// The `(x1, x2)` columns of a trajectory CSV; non-finite rows are skipped.
pub fn read_points(text: &str) -> Result<Vec<[f64; 2]>, PlotError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| PlotError::Format(format!("missing column {name}")))
    };
    let (i1, i2) = (col("x1")?, col("x2")?);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let get = |i: usize| {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| PlotError::Format(format!("bad number in row {:?}", rec.position().map(|p| p.line()))))
        };
        let p = [get(i1)?, get(i2)?];
        if p[0].is_finite() && p[1].is_finite() {
            out.push(p);
        }
    }
    if out.is_empty() {
        return Err(PlotError::Format("no finite samples".into()));
    }
    Ok(out)
}

/// Polyline of `(x1, x2)` in a viewBox fitted to the samples with a 5%
/// margin. `x2` points up.
pub fn svg_from_csv(text: &str) -> Result<String, PlotError> {
    let pts = read_points(text)?;
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let mut span = [hi[0] - lo[0], hi[1] - lo[1]];
    for k in 0..2 {
        if span[k] <= 0.0 {
            span[k] = 1.0;
            lo[k] -= 0.5;
        }
    }
    let m = [0.05 * span[0], 0.05 * span[1]];
    let (vx, vy) = (lo[0] - m[0], -(lo[1] + span[1]) - m[1]);
    let (vw, vh) = (span[0] + 2.0 * m[0], span[1] + 2.0 * m[1]);
    let stroke = 0.004 * vw.max(vh);
    let font = 0.04 * vw.max(vh);
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{vx} {vy} {vw} {vh}">"#).unwrap();
    write!(s, r#"<polyline fill="none" stroke="black" stroke-width="{stroke}" points=""#).unwrap();
    for (i, p) in pts.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{},{}", p[0] + 0.0, 0.0 - p[1]).unwrap();
    }
    writeln!(s, r#""/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="{font}" text-anchor="middle">x1</text>"#,
        vx + 0.5 * vw,
        vy + vh - 0.2 * m[1]
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="{font}" text-anchor="middle" transform="rotate(-90 {} {})">x2</text>"#,
        vx + 0.6 * m[0],
        vy + 0.5 * vh,
        vx + 0.6 * m[0],
        vy + 0.5 * vh
    )
    .unwrap();
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64, y: &[f64]) -> Sample {
        Sample { t, y: y.to_vec(), dy: vec![0.0; y.len()] }
    }

    #[test]
    fn csv_headers() {
        let s = [sample(0.0, &[1.0, 2.0, 3.0, 4.0])];
        assert!(csv_string(&s, true).starts_with("t,x1,x2,v1,v2\n0,1,2,3,4\n"));
        assert!(csv_string(&s, false).starts_with("t,x1,x2\n0,1,2\n"));
    }

    #[test]
    fn svg_viewbox_margin() {
        let csv = "t,x1,x2\n0,0,0\n1,10,20\n";
        let svg = svg_from_csv(csv).unwrap();
        assert!(svg.contains(r#"viewBox="-0.5 -21 11 22""#), "{svg}");
        assert!(svg.contains("points=\"0,0 10,-20\""));
        assert!(svg.contains(">x1<") && svg.contains(">x2<"));
        assert_eq!(svg, svg_from_csv(csv).unwrap());
    }

    #[test]
    fn svg_rejects_bad_csv() {
        assert!(svg_from_csv("t,a,b\n0,1,2\n").is_err());
        assert!(svg_from_csv("t,x1,x2\n").is_err());
    }
}
