//! Seeded synthetic market generator with a planted predictive signal.
//!
//! The generator emits a geometric random walk per symbol. A hidden
//! standard-normal draw g[s,t] is injected both into the vwap column
//! (vwap = close × (1 + 0.01·g)) and, scaled by the configured strength,
//! into the close-to-close return two days ahead. The factor
//! `$vwap/$close-1` therefore predicts the label with cross-sectional
//! correlation approximately equal to the strength.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsl::FeatureField;
use crate::panel::PanelOf;

/// Canonical expression recovering the planted signal.
pub const PLANTED_EXPRESSION: &str = "$vwap/$close-1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub symbols: usize,
    pub days: usize,
    pub seed: u64,
    /// Target cross-sectional correlation between the planted signal and
    /// the forward label.
    pub signal_strength: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            symbols: 20,
            days: 500,
            seed: 1,
            signal_strength: 0.1,
        }
    }
}

/// Sidecar metadata describing the planted-signal recipe, written next to
/// the generated CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSidecar {
    pub config: SynthConfig,
    pub planted_expression: String,
    pub recipe: String,
}

pub fn sidecar(cfg: &SynthConfig) -> SynthSidecar {
    SynthSidecar {
        config: cfg.clone(),
        planted_expression: PLANTED_EXPRESSION.to_string(),
        recipe: "vwap = close * (1 + 0.01*g[s,t]); return[t+2] mixes g[s,t] at the configured strength".to_string(),
    }
}

pub fn generate(cfg: &SynthConfig) -> PanelOf<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let symbols: Vec<String> = (0..cfg.symbols).map(|i| format!("SYM{i:03}")).collect();
    let dates: Vec<String> = (0..cfg.days).map(date_token).collect();
    let mut panel = PanelOf::new(symbols, dates).unwrap();

    let a = cfg.signal_strength.clamp(0.0, 0.99);
    let noise_mix = (1.0 - a * a).sqrt();
    let vol = 0.02;
    let drift = 0.0002;

    for s in 0..cfg.symbols {
        let start: f64 = rng.gen_range(10.0..200.0);
        // Pre-draw the planted signal series for this symbol.
        let g: Vec<f64> = (0..cfg.days).map(|_| normal(&mut rng)).collect();
        let mut close = start;
        let mut prev_close = start;
        for t in 0..cfg.days {
            if t > 0 {
                let planted = if t >= 2 { g[t - 2] } else { 0.0 };
                let ret = drift + vol * (noise_mix * normal(&mut rng) + a * planted);
                prev_close = close;
                close *= 1.0 + ret;
            }
            let open = prev_close * (1.0 + 0.003 * normal(&mut rng));
            let spread = 0.005 * normal(&mut rng).abs();
            let high = open.max(close) * (1.0 + spread);
            let low = open.min(close) * (1.0 - spread);
            let volume = (1.0e6 * (0.3 * normal(&mut rng)).exp()).round();
            let vwap = close * (1.0 + 0.01 * g[t]);
            panel.feature_mut(FeatureField::Open).set(s, t, open);
            panel.feature_mut(FeatureField::High).set(s, t, high);
            panel.feature_mut(FeatureField::Low).set(s, t, low);
            panel.feature_mut(FeatureField::Close).set(s, t, close);
            panel.feature_mut(FeatureField::Volume).set(s, t, volume);
            panel.feature_mut(FeatureField::Vwap).set(s, t, vwap);
        }
    }
    panel
}

/// Serialize a panel to the ingest CSV format, rows ordered by date then
/// symbol. Deterministic byte-for-byte for a given panel.
pub fn panel_to_csv(panel: &PanelOf<f64>) -> String {
    let mut out = String::from("date,symbol,open,high,low,close,volume,vwap\n");
    for t in 0..panel.n_dates() {
        for s in 0..panel.n_symbols() {
            let cell = |f: FeatureField| {
                let v = panel.feature(f).get(s, t);
                if v.is_finite() {
                    format!("{v}")
                } else {
                    String::new()
                }
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                panel.dates()[t],
                panel.symbols()[s],
                cell(FeatureField::Open),
                cell(FeatureField::High),
                cell(FeatureField::Low),
                cell(FeatureField::Close),
                cell(FeatureField::Volume),
                cell(FeatureField::Vwap),
            ));
        }
    }
    out
}

/// Synthetic trading-day tokens: ISO-8601, lexicographically increasing.
fn date_token(i: usize) -> String {
    // 28-day months keep the arithmetic trivial and the ordering correct.
    let year = 2020 + i / 336;
    let month = (i % 336) / 28 + 1;
    let day = i % 28 + 1;
    format!("{year:04}-{month:02}-{day:02}")
}

/// Standard normal via Box-Muller on uniform draws.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
