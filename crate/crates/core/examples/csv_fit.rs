//! Fit a model from a delimited file, as the `fit` subcommand does.
//!
//! cargo run --example csv_fit -- <file> <response> <covariate,...> [delimiter] [moment|em|ols]
//!
//! Without arguments a small synthetic file is written to a temporary directory.
//! For the wine-quality data (semicolon separated), e.g.
//! `cargo run --example csv_fit -- winequality-red.csv "volatile acidity" pH ";"`.

use mommix::cli::{cmd_fit, parse_delimiter, FitEstimator, FitOptions};
use mommix::simulation::{generate, ScenarioKind, ScenarioSpec};

fn synthetic_file(dir: &std::path::Path) -> mommix::Result<std::path::PathBuf> {
    let data = generate(&ScenarioSpec::new(ScenarioKind::ZeroInflatedGaussian, 1500, 0.4, 11)?);
    let mut text = String::from("acidity,ph\n");
    for (y, x) in data.y().iter().zip(data.x().column(0)) {
        text.push_str(&format!("{y},{x}\n"));
    }
    text.push_str("NA,1.0\n");
    let path = dir.join("synthetic.csv");
    std::fs::write(&path, text)?;
    Ok(path)
}

fn main() -> mommix::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let tmp = tempfile::tempdir()?;
    let (path, response, covariates) = if args.len() >= 3 {
        (
            args[0].clone().into(),
            args[1].clone(),
            args[2].split(',').map(String::from).collect(),
        )
    } else {
        (
            synthetic_file(tmp.path())?,
            "acidity".to_string(),
            vec!["ph".to_string()],
        )
    };
    let delimiter = parse_delimiter(args.get(3).map_or(",", String::as_str))?;
    let estimator: FitEstimator = args.get(4).map_or("moment", String::as_str).parse()?;

    for est in [FitEstimator::Ols, estimator] {
        let report = cmd_fit(&FitOptions {
            csv_path: path.clone(),
            response: response.clone(),
            covariates: covariates.clone(),
            level: 0.95,
            estimator: est,
            delimiter,
            seed: 1,
        })?;
        println!("{}", report.to_text());
    }
    Ok(())
}
