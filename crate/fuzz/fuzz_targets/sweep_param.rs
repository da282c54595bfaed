#![no_main]
use libfuzzer_sys::fuzz_target;
use phononet::config::{self, ParamPath};

const BASE: &str = r#"
[waveguide]
length_um = 100.0
[branches.transverse]
group_velocity_m_s = 7300.0
wavevector_rad_per_um = 31.7
beta = 1.0
reflectivity = 0.9
[nodes.e]
position_um = 5.0
role = "emitter"
[nodes.e.drive]
kind = "constant"
gamma_max_mhz = 0.25
[simulation]
t_max_us = 1.0
"#;

// First line is the parameter path, the rest a value to assign.
fuzz_target!(|src: &str| {
    let (path, value) = src.split_once('\n').unwrap_or((src, "1.0"));
    let Ok(param) = ParamPath::parse(path) else { return };
    let mut doc = config::parse_document(BASE).expect("base scenario parses");
    if param.resolve(&doc).is_ok() {
        let value = value.trim().parse::<f64>().unwrap_or(1.0);
        if param.set(&mut doc, value).is_ok() {
            let _ = config::from_document(&doc);
        }
    }
});
