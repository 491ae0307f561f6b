//! Regression and ranking metrics plus mean/std aggregation over
//! cross-validation cells.
//!
//! cargo run --release --example metrics

use dti_core::metrics::{aggregate, concordance_index, concordance_index_fast, pearson_r2, rmse, MetricCell};

fn main() -> dti_core::Result<()> {
    let labels = [5.0, 6.0, 6.0, 7.5, 9.0];
    let predictions = [5.2, 5.9, 6.4, 7.0, 8.1];
    println!("rmse {:.4}", rmse(&predictions, &labels)?);
    println!(
        "ci   {:.4} (fast: {:.4})",
        concordance_index(&predictions, &labels)?,
        concordance_index_fast(&predictions, &labels)?
    );
    println!("r2   {:.4}", pearson_r2(&predictions, &labels)?);
    println!("ci of a constant predictor: {}", concordance_index(&[1.0; 5], &labels)?);

    let cells: Vec<MetricCell> = (0..5)
        .flat_map(|fold| {
            (0..2).map(move |seed| MetricCell {
                fold,
                seed,
                value: 0.5 + 0.01 * (fold * 2 + seed as usize) as f64,
            })
        })
        .collect();
    let report = aggregate("rmse", "warm", &cells);
    println!("{} cells: {:.4} ± {:.4}", report.cells.len(), report.mean, report.std);
    println!("per fold: {:?}", report.per_fold);
    Ok(())
}
