use crate::error::{Error, Result};

fn check(pred: &[f64], gold: &[f64]) -> Result<()> {
    if pred.len() != gold.len() {
        return Err(Error::Invalid(format!(
            "length mismatch: {} predictions, {} gold values",
            pred.len(),
            gold.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Invalid("metric over an empty vector".into()));
    }
    Ok(())
}

pub fn mae(pred: &[f64], gold: &[f64]) -> Result<f64> {
    check(pred, gold)?;
    Ok(pred.iter().zip(gold).map(|(p, g)| (p - g).abs()).sum::<f64>() / pred.len() as f64)
}

pub fn rmse(pred: &[f64], gold: &[f64]) -> Result<f64> {
    check(pred, gold)?;
    let mse = pred.iter().zip(gold).map(|(p, g)| (p - g) * (p - g)).sum::<f64>() / pred.len() as f64;
    Ok(mse.sqrt())
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    check(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)))
}
