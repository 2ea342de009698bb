//! The 98 operating-mode parameterisations (OMP) grouped under 17 operating modes
//! (OM).
//!
//! Numeric parameters follow the public amateur-radio conventions for each mode
//! (as implemented by common soundcard modem software). Each table row below
//! names the convention it relies on. Suffix meanings such as `F`/`FL`
//! (FEC / FEC with long interleave), `L` (long interleave), `S`/`L` for MT63
//! (short / long interleave) and `x1/x2/x4` for Thor (tone-spacing multiplier)
//! are modem-software conventions, not something a spectrogram can observe
//! directly.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default audio-frequency centre of every mode.
pub const DEFAULT_CENTER_HZ: f64 = 1500.0;

/// Waveform family a catalog entry is synthesized with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ModeFamily {
    Cw,
    FskRtty,
    Psk,
    MultiCarrierPsk,
    Mfsk,
    /// Incremental frequency keying: DominoEx, Thor, IFKP.
    Ifk,
    Throb,
    Mt63,
    OfdmGeneric,
    Noise,
}

/// One OMP entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    /// Operating mode, e.g. `Olivia`.
    pub om_label: String,
    /// Parameter cell exactly as tabulated, e.g. `8/250`.
    pub param: String,
    /// Unique OMP label, e.g. `Olivia 8/250`; equal to `om_label` for single-entry modes.
    pub omp_label: String,
    pub family: ModeFamily,
    /// Symbols per second.
    pub baud: f64,
    /// Tone count for frequency-keyed families, 0 otherwise.
    pub tones: u32,
    pub tone_spacing_hz: f64,
    /// Number of parallel carriers; 1 for single-carrier modes.
    pub carriers: u32,
    pub center_hz: f64,
    pub nominal_bandwidth_hz: f64,
    /// OMPs that share a group differ only by protocol coding the synthesizer
    /// approximates with symbol-stream statistics.
    pub waveform_degenerate_group: Option<String>,
    /// Constellation size for PSK-type carriers (2, 4 or 8); 0 when not PSK.
    pub psk_order: u32,
    /// Repetition factor standing in for FEC coding; 1 means uncoded.
    pub bit_repeat: u32,
}

impl ModeSpec {
    pub fn index(&self) -> usize {
        catalog()
            .iter()
            .position(|m| m.omp_label == self.omp_label)
            .expect("spec comes from the catalog")
    }
}

struct Row {
    om: &'static str,
    params: &'static [&'static str],
}

/// Table rows in tabulated order.
const TABLE: &[Row] = &[
    Row { om: "BPSK", params: &["31", "63", "63F", "125", "250", "500", "1000"] },
    Row { om: "QPSK", params: &["31", "63", "125", "250", "500"] },
    Row {
        om: "8PSK",
        params: &["125", "125F", "125FL", "250", "250F", "250FL", "500", "500F", "1000", "1000F", "1200F"],
    },
    Row { om: "MC-PSK", params: &["125C12", "250C6", "500C2", "500C4", "800C2", "1000C2"] },
    Row { om: "PSKR", params: &["125", "250", "500", "1000"] },
    Row {
        om: "Olivia",
        params: &["4/125", "4/250", "8/250", "8/500", "16/500", "16/1000", "32/1000", "64/2000"],
    },
    Row {
        om: "Contestia",
        params: &["4/125", "4/250", "4/500", "8/250", "8/500", "16/500", "32/1000", "64/2000"],
    },
    Row { om: "MFSK", params: &["4", "8", "11", "16", "22", "31", "64", "64L", "128", "128L"] },
    Row {
        om: "DominoEx",
        params: &["EX Micro", "EX4", "EX5", "EX8", "X11", "X16", "X22", "X44", "X88"],
    },
    Row {
        om: "Thor",
        params: &["Micro", "100", "11", "16", "22", "25x4", "4", "5", "50x1", "50x2", "8"],
    },
    Row { om: "Throb", params: &["BX1", "BX2", "BX4", "OB1", "OB2", "OB4"] },
    Row { om: "MT63", params: &["500S", "500L", "1000S", "1000L", "2000S", "2000L"] },
    Row { om: "OFDM", params: &["500F", "750F", "3500"] },
    Row { om: "RTTY", params: &["RTTY"] },
    Row { om: "IFKP", params: &["IFKP"] },
    Row { om: "CW", params: &["CW"] },
    Row { om: "Noise", params: &["Noise"] },
];

/// Occupied bandwidth of a cosine-shaped PSK carrier relative to its baud rate.
const PSK_BW_FACTOR: f64 = 1.2;
/// Multi-carrier PSK subcarrier spacing relative to the baud rate.
const MCPSK_SPACING_FACTOR: f64 = 1.5;
/// Usable audio band for wide modes; content outside is dropped at synthesis.
pub const AF_BAND_HZ: (f64, f64) = (50.0, 2950.0);

/// Incremental-frequency-keying mode base rates shared by DominoEx and Thor
/// (8 kHz / 11.025 kHz sound-card derived symbol rates).
fn ifk_baud(speed: &str) -> f64 {
    match speed {
        "Micro" => 2.0,
        "4" => 3.90625,
        "5" => 5.383_301_6,
        "8" => 7.8125,
        "11" => 10.766_602,
        "16" => 15.625,
        "22" => 21.533_203,
        "44" => 43.066_406,
        "88" => 86.132_813,
        _ => unreachable!("unknown IFK speed {speed}"),
    }
}

struct Params {
    family: ModeFamily,
    baud: f64,
    tones: u32,
    spacing: f64,
    carriers: u32,
    bandwidth: f64,
    group: Option<String>,
    psk_order: u32,
    bit_repeat: u32,
}

impl Params {
    fn psk(order: u32, baud: f64, bit_repeat: u32, group: Option<String>) -> Self {
        Self {
            family: ModeFamily::Psk,
            baud,
            tones: 0,
            spacing: 0.0,
            carriers: 1,
            bandwidth: PSK_BW_FACTOR * baud,
            group,
            psk_order: order,
            bit_repeat,
        }
    }

    fn fsk(family: ModeFamily, tones: u32, baud: f64, spacing: f64, bit_repeat: u32, group: Option<String>) -> Self {
        Self {
            family,
            baud,
            tones,
            spacing,
            carriers: 1,
            bandwidth: tones as f64 * spacing,
            group,
            psk_order: 0,
            bit_repeat,
        }
    }

    fn multi(family: ModeFamily, carriers: u32, baud: f64, spacing: f64, bandwidth: f64, bit_repeat: u32, group: Option<String>) -> Self {
        Self {
            family,
            baud,
            tones: 0,
            spacing,
            carriers,
            bandwidth,
            group,
            psk_order: 2,
            bit_repeat,
        }
    }
}

/// PSK baud from the tabulated speed number: 31 -> 31.25, 63 -> 62.5, others literal.
fn psk_baud(speed: &str) -> f64 {
    match speed {
        "31" => 31.25,
        "63" => 62.5,
        s => s.parse().expect("numeric PSK speed"),
    }
}

fn params_for(om: &str, param: &str) -> Params {
    use ModeFamily::*;
    match om {
        // PSK31 family: 31.25 Bd base rate, doubled per step; F/FL = FEC / FEC +
        // long interleave, same symbol rate.
        "BPSK" | "QPSK" | "8PSK" | "PSKR" => {
            let order = match om {
                "QPSK" => 4,
                "8PSK" => 8,
                _ => 2,
            };
            let speed = param.trim_end_matches(['F', 'L']);
            let suffix = &param[speed.len()..];
            let baud = psk_baud(speed);
            // PSKR is BPSK with a rate-1/2 convolutional code.
            let repeat = match (om, suffix) {
                ("PSKR", _) => 2,
                (_, "F") => 2,
                (_, "FL") => 3,
                _ => 1,
            };
            let group = match om {
                "8PSK" if speed != "1200" => Some(format!("8PSK {speed}")),
                "BPSK" if speed == "63" => Some("BPSK 63".to_string()),
                "BPSK" | "PSKR" if ["125", "250", "500", "1000"].contains(&speed) => {
                    Some(format!("BPSK {speed}"))
                }
                _ => None,
            };
            Params::psk(order, baud, repeat, group)
        }
        // Multi-carrier PSK: "<baud>C<carriers>", BPSK subcarriers 1.5 x baud apart.
        "MC-PSK" => {
            let (b, c) = param.split_once('C').expect("nCk label");
            let baud: f64 = b.parse().expect("numeric baud");
            let carriers: u32 = c.parse().expect("numeric carrier count");
            let spacing = MCPSK_SPACING_FACTOR * baud;
            let bw = (carriers - 1) as f64 * spacing + PSK_BW_FACTOR * baud;
            Params::multi(MultiCarrierPsk, carriers, baud, spacing, bw, 1, None)
        }
        // Olivia / Contestia "tones/bandwidth": spacing = baud = bandwidth / tones.
        "Olivia" | "Contestia" => {
            let (t, b) = param.split_once('/').expect("t/B label");
            let tones: u32 = t.parse().expect("numeric tones");
            let bw: f64 = b.parse().expect("numeric bandwidth");
            let spacing = bw / tones as f64;
            Params::fsk(Mfsk, tones, spacing, spacing, 1, Some(format!("Olivia/Contestia {param}")))
        }
        // MFSKn: tone spacing equals baud; L = long interleave.
        "MFSK" => {
            let speed = param.trim_end_matches('L');
            let (tones, baud) = match speed {
                "4" => (32, 3.90625),
                "8" => (32, 7.8125),
                "11" => (16, 10.766_602),
                "16" => (16, 15.625),
                "22" => (16, 21.533_203),
                "31" => (8, 31.25),
                "64" => (16, 62.5),
                "128" => (16, 125.0),
                _ => unreachable!(),
            };
            let long = param.ends_with('L');
            let group = (speed == "64" || speed == "128").then(|| format!("MFSK {speed}"));
            Params::fsk(Mfsk, tones, baud, baud, if long { 2 } else { 1 }, group)
        }
        // DominoEX: 18 tones, IFK+; spacing is 2 x baud for the slow speeds
        // (Micro excepted) and 1 x baud from 11 upward.
        "DominoEx" => {
            let speed = param.trim_start_matches("EX").trim_start_matches('X').trim();
            let speed = if speed.is_empty() || param == "EX Micro" { "Micro" } else { speed };
            let baud = ifk_baud(speed);
            let mult = if ["4", "5", "8"].contains(&speed) { 2.0 } else { 1.0 };
            Params::fsk(Ifk, 18, baud, mult * baud, 1, Some(format!("IFK {speed}")))
        }
        // Thor: DominoEX waveform plus FEC. "NxM" = N baud with spacing M x baud;
        // Thor 100 is 100 Bd at 1 x spacing.
        "Thor" => {
            let (baud, mult, group) = if let Some((b, m)) = param.split_once('x') {
                (b.parse::<f64>().expect("baud"), m.parse::<f64>().expect("multiplier"), None)
            } else if param == "100" {
                (100.0, 1.0, None)
            } else {
                let baud = ifk_baud(param);
                let mult = if ["4", "5", "8"].contains(&param) { 2.0 } else { 1.0 };
                (baud, mult, Some(format!("IFK {param}")))
            };
            Params::fsk(Ifk, 18, baud, mult * baud, 2, group)
        }
        // Throb: 9-tone palette (8 Hz / 16 Hz spacing); ThrobX: 11 tones
        // (7.8125 Hz / 15.625 Hz). Speed 1, 2 or 4 Bd.
        "Throb" => {
            let x = param.starts_with("BX");
            let speed: f64 = param[2..].parse().expect("throb speed");
            let (tones, spacing) = match (x, speed as u32) {
                (false, 4) => (9, 16.0),
                (false, _) => (9, 8.0),
                (true, 4) => (11, 15.625),
                (true, _) => (11, 7.8125),
            };
            Params::fsk(Throb, tones, speed, spacing, 1, None)
        }
        // MT63: 64 carriers spread over the nominal bandwidth, symbol rate =
        // bandwidth / 100; S/L = short / long interleave.
        "MT63" => {
            let bw: f64 = param[..param.len() - 1].parse().expect("MT63 bandwidth");
            let long = param.ends_with('L');
            Params::multi(
                Mt63,
                64,
                bw / 100.0,
                bw / 64.0,
                bw,
                if long { 2 } else { 1 },
                Some(format!("MT63 {}", &param[..param.len() - 1])),
            )
        }
        // OFDM: DBPSK subcarriers spaced one baud apart. 500F: 8 x 62.5 Bd,
        // 750F: 12 x 62.5 Bd, 3500: 14 x 250 Bd (wider than the 3 kHz channel,
        // so the outer carriers are dropped and the nominal width is clamped).
        "OFDM" => {
            let (carriers, baud, repeat) = match param {
                "500F" => (8, 62.5, 2),
                "750F" => (12, 62.5, 2),
                "3500" => (14, 250.0, 1),
                _ => unreachable!(),
            };
            let bw = (carriers as f64 * baud).min(AF_BAND_HZ.1 - AF_BAND_HZ.0);
            Params::multi(OfdmGeneric, carriers, baud, baud, bw, repeat, None)
        }
        // RTTY: 45.45 Bd, 170 Hz shift, ~250 Hz occupied.
        "RTTY" => Params {
            family: FskRtty,
            baud: 45.45,
            tones: 2,
            spacing: 170.0,
            carriers: 1,
            bandwidth: 250.0,
            group: None,
            psk_order: 0,
            bit_repeat: 1,
        },
        // IFKP: 33 tones, IFK with offset 1, 5.859375 Bd at 2 x baud spacing.
        "IFKP" => Params::fsk(Ifk, 33, 5.859_375, 2.0 * 5.859_375, 1, None),
        // CW: 25 WPM (dot = 48 ms), 5 ms raised-cosine keying edges.
        "CW" => Params {
            family: Cw,
            baud: CW_WPM / 1.2,
            tones: 0,
            spacing: 0.0,
            carriers: 1,
            bandwidth: 100.0,
            group: None,
            psk_order: 0,
            bit_repeat: 1,
        },
        "Noise" => Params {
            family: Noise,
            baud: 0.0,
            tones: 0,
            spacing: 0.0,
            carriers: 1,
            bandwidth: AF_BAND_HZ.1 - AF_BAND_HZ.0,
            group: None,
            psk_order: 0,
            bit_repeat: 1,
        },
        _ => unreachable!("unknown OM {om}"),
    }
}

/// Morse speed in words per minute (PARIS timing).
pub const CW_WPM: f64 = 25.0;

fn build() -> Vec<ModeSpec> {
    let mut out = Vec::with_capacity(98);
    for row in TABLE {
        for &param in row.params {
            let p = params_for(row.om, param);
            let omp_label = if param == row.om {
                row.om.to_string()
            } else {
                format!("{} {}", row.om, param)
            };
            out.push(ModeSpec {
                om_label: row.om.to_string(),
                param: param.to_string(),
                omp_label,
                family: p.family,
                baud: p.baud,
                tones: p.tones,
                tone_spacing_hz: p.spacing,
                carriers: p.carriers,
                center_hz: DEFAULT_CENTER_HZ,
                nominal_bandwidth_hz: p.bandwidth,
                waveform_degenerate_group: p.group,
                psk_order: p.psk_order,
                bit_repeat: p.bit_repeat,
            });
        }
    }
    out
}

/// The full catalog in tabulated order. Indices into this slice are the class ids
/// used everywhere else.
pub fn catalog() -> &'static [ModeSpec] {
    static CATALOG: OnceLock<Vec<ModeSpec>> = OnceLock::new();
    CATALOG.get_or_init(build)
}

/// Distinct OM labels in tabulated order.
pub fn om_labels() -> Vec<&'static str> {
    TABLE.iter().map(|r| r.om).collect()
}

/// Looks up an OMP by its unique label.
pub fn find(omp_label: &str) -> Result<&'static ModeSpec> {
    catalog()
        .iter()
        .find(|m| m.omp_label == omp_label)
        .ok_or_else(|| Error::param(format!("unknown OMP label {omp_label:?}")))
}

/// Maps an OMP label to the OM that owns it.
pub fn rollup_om(omp_label: &str) -> Result<&'static str> {
    find(omp_label).map(|m| m.om_label.as_str())
}

/// Rows of (OM, comma-joined OMP parameters) in tabulated order.
pub fn table_rows() -> Vec<(String, String)> {
    TABLE
        .iter()
        .map(|r| (r.om.to_string(), r.params.join(", ")))
        .collect()
}
