//! The bundled example under `fixtures/` is generated from a seeded
//! synthetic market. Run with `REGENERATE_FIXTURES=1` to rewrite it.

use std::path::{Path, PathBuf};

use tailfolio::backtest::{generate_synthetic, SyntheticConfig};
use tailfolio::data::io::{dated_csv_string, UniverseManifest};

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

const CONFIG: &str = r#"seed = 11

[data]
prices = "prices.csv"
factors = "factors"
universe = "universe.toml"

[output]
dir = "out"
log_level = "warn"

[backtest]
window = 120
n_scenarios = 400
alphas = [0.5, 0.9]
factor_model = "gam"
fixed_spec = "1,0,1,1"
restarts = 1
max_days = 3

[optimize]
alpha = 0.75
"#;

fn expected_files() -> Vec<(PathBuf, String)> {
    let m = generate_synthetic(&SyntheticConfig::new(3, 140, 11)).unwrap();
    let p = &m.prices;
    let mut files = vec![(PathBuf::from("prices.csv"), dated_csv_string(p.tickers(), p.dates(), p.prices()))];
    for panel in m.factors.panels() {
        files.push((
            PathBuf::from("factors").join(format!("{}.csv", panel.ticker)),
            dated_csv_string(&panel.factor_names, &panel.dates, &panel.values),
        ));
    }
    let manifest = UniverseManifest { tickers: p.tickers().to_vec(), factors: Vec::new() };
    files.push((PathBuf::from("universe.toml"), manifest.to_toml()));
    files.push((PathBuf::from("config.toml"), CONFIG.to_string()));
    files
}

#[test]
fn bundled_fixture_matches_generator() {
    let dir = fixture_dir();
    let regenerate = std::env::var_os("REGENERATE_FIXTURES").is_some();
    for (rel, text) in expected_files() {
        let path = dir.join(&rel);
        if regenerate {
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(&path, &text).unwrap();
        }
        let on_disk = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(on_disk, text, "{} is out of date; rerun with REGENERATE_FIXTURES=1", rel.display());
    }
}
