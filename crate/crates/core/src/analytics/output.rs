use std::io::{self, Write};

use toml::{Table, Value};

use super::{ConnectivityMatrix, SweepPoint};

/// Writes a sweep curve: swept value, peak fidelity, its time, final value
/// and the conservation residual of each run.
pub fn write_curve_csv<W: Write>(mut w: W, x_label: &str, points: &[SweepPoint]) -> io::Result<()> {
    writeln!(w, "{x_label},f_peak,t_peak_us,f_final,norm_residual")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{}",
            p.value, p.f_peak, p.t_peak, p.f_final, p.norm_residual
        )?;
    }
    Ok(())
}

/// Writes a connectivity matrix, one row per emitter and one column per
/// receiver. Diagonal cells read `NaN`.
pub fn write_matrix_csv<W: Write>(mut w: W, m: &ConnectivityMatrix) -> io::Result<()> {
    let header: Vec<String> = (0..m.size).map(|r| format!("r{r}")).collect();
    writeln!(w, "emitter,{}", header.join(","))?;
    for e in 0..m.size {
        let row: Vec<String> = (0..m.size).map(|r| format!("{}", m.get(e, r))).collect();
        writeln!(w, "e{e},{}", row.join(","))?;
    }
    Ok(())
}

/// Plot description written next to every CSV artifact.
///
/// Holds axis labels, the invocation parameters and the full scenario
/// text, which together reproduce the artifact.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sidecar {
    pub kind: String,
    pub x_label: String,
    pub y_label: String,
    pub parameters: Table,
    pub scenario: Option<String>,
}

impl Sidecar {
    pub fn new(kind: &str, x_label: &str, y_label: &str) -> Self {
        Sidecar {
            kind: kind.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Default::default()
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.into(), value.into());
        self
    }

    pub fn scenario(mut self, text: impl Into<String>) -> Self {
        self.scenario = Some(text.into());
        self
    }

    pub fn to_toml(&self) -> String {
        let mut plot = Table::new();
        plot.insert("kind".into(), self.kind.clone().into());
        plot.insert("x_label".into(), self.x_label.clone().into());
        plot.insert("y_label".into(), self.y_label.clone().into());
        let mut root = Table::new();
        root.insert("plot".into(), Value::Table(plot));
        root.insert("parameters".into(), Value::Table(self.parameters.clone()));
        if let Some(s) = &self.scenario {
            root.insert("scenario".into(), Value::String(s.clone()));
        }
        toml::to_string(&root).expect("tables always serialise")
    }

    /// Path of the sidecar belonging to `csv`: `out.csv` → `out.meta.toml`.
    pub fn path_for(csv: &std::path::Path) -> std::path::PathBuf {
        csv.with_extension("meta.toml")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_round_trips() {
        let text = "[waveguide]\nlength_um = 100.0\n";
        let s = Sidecar::new("sweep", "x_um", "f_peak")
            .param("param", "nodes.r.position")
            .param("steps", 3i64)
            .scenario(text);
        let back: Table = s.to_toml().parse().unwrap();
        assert_eq!(back["plot"]["kind"].as_str(), Some("sweep"));
        assert_eq!(back["parameters"]["steps"].as_integer(), Some(3));
        assert_eq!(back["scenario"].as_str(), Some(text));
        assert_eq!(
            Sidecar::path_for(std::path::Path::new("a/out.csv")),
            std::path::PathBuf::from("a/out.meta.toml")
        );
    }

    #[test]
    fn empty_curve_is_header_only() {
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, "x", &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,f_peak,t_peak_us,f_final,norm_residual\n");
    }
}
