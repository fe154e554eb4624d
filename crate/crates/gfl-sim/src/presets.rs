//! Built-in reference designs: a 20 kW unit on a 1200 V DC link and a
//! high-voltage variant on a 1500 V link with a stiffer droop. The bundled
//! files under `configs/` are the single source of truth; these helpers
//! parse them at first use.

use crate::config::{parse_config, RunConfig};

/// 20 kW reference design: 1200 V DC link, 1.2 Ohm tracking gain,
/// 0.4 mA/W droop, bursty 10 kW-base load.
pub fn baseline() -> RunConfig {
    parse_config(include_str!("../configs/baseline.json")).expect("bundled baseline config")
}

/// High-voltage variant: 1500 V DC link (1399 V floor), 2.3 Ohm tracking
/// gain, 2.7 mA/W droop. The wider modulation margin buys a larger droop
/// gain at the cost of ramp headroom; its design margins land the
/// sequential procedure on exactly these gains.
pub fn high_voltage() -> RunConfig {
    parse_config(include_str!("../configs/highvolt.json")).expect("bundled high-voltage config")
}
