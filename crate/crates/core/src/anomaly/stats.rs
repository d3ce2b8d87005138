use super::AnomalyError;

/// Scales MAD to a Gaussian standard deviation.
pub const MAD_SCALE: f64 = 1.4826;
/// Scales mean absolute deviation to a Gaussian standard deviation (sqrt(pi/2)).
pub const MEAN_AD_SCALE: f64 = 1.253314;

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    median_in_place(&mut v)
}

fn median_in_place(v: &mut [f64]) -> f64 {
    let n = v.len();
    let mid = n / 2;
    let (_, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lower + upper) / 2.0
    }
}

/// `|v - median| / (1.4826 * MAD)`. When MAD is zero the mean absolute
/// deviation about the median (scaled by 1.253314) is used instead; when that
/// is zero too, every score is zero.
pub fn robust_zscores(series: &[f64]) -> Result<Vec<f64>, AnomalyError> {
    if series.len() < 3 {
        return Err(AnomalyError::SeriesTooShort(series.len()));
    }
    let med = median(series);
    let mut dev: Vec<f64> = series.iter().map(|v| (v - med).abs()).collect();
    let mean_ad = dev.iter().sum::<f64>() / dev.len() as f64;
    let abs_dev = dev.clone();
    let mad = median_in_place(&mut dev);
    let scale = if mad > 0.0 {
        MAD_SCALE * mad
    } else if mean_ad > 0.0 {
        MEAN_AD_SCALE * mean_ad
    } else {
        return Ok(vec![0.0; series.len()]);
    };
    Ok(abs_dev.into_iter().map(|d| d / scale).collect())
}
