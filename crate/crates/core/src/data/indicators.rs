use super::DataError;

/// Relative strength index over a trailing window of `n` day-on-day changes.
///
/// Output element `j` uses the changes ending at price `j + n`, so the result
/// has `prices.len() - n` entries. AvgUp/AvgDown are the means of the up and
/// (absolute) down moves inside the window; a window without down moves
/// scores 100 and one without up moves scores 0.
pub fn compute_rsi(prices: &[f64], n: usize) -> Result<Vec<f64>, DataError> {
    if n == 0 || prices.len() <= n {
        return Err(DataError::WindowTooLong { window: n, len: prices.len() });
    }
    let changes: Vec<f64> = prices.windows(2).map(|w| w[1] - w[0]).collect();
    let out = changes
        .windows(n)
        .map(|win| {
            let (mut up, mut n_up, mut down, mut n_down) = (0.0, 0usize, 0.0, 0usize);
            for &c in win {
                if c > 0.0 {
                    up += c;
                    n_up += 1;
                } else if c < 0.0 {
                    down -= c;
                    n_down += 1;
                }
            }
            if n_down == 0 {
                // flat windows count as "no down moves"
                return if n_up == 0 { 50.0 } else { 100.0 };
            }
            if n_up == 0 {
                return 0.0;
            }
            let rs = (up / n_up as f64) / (down / n_down as f64);
            100.0 - 100.0 / (1.0 + rs)
        })
        .collect();
    Ok(out)
}

/// Average true range: simple `n`-day moving average of
/// `max(high - low, |high - prev_close|, |low - prev_close|)`.
///
/// True ranges start at the second observation, so the output has
/// `len - n` entries.
pub fn compute_atr(highs: &[f64], lows: &[f64], closes: &[f64], n: usize) -> Result<Vec<f64>, DataError> {
    let len = closes.len();
    if highs.len() != len || lows.len() != len {
        return Err(DataError::MisalignedSeries(format!(
            "highs/lows/closes lengths {}/{}/{}",
            highs.len(),
            lows.len(),
            len
        )));
    }
    if n == 0 || len <= n {
        return Err(DataError::WindowTooLong { window: n, len });
    }
    let tr: Vec<f64> = (1..len)
        .map(|t| {
            let prev = closes[t - 1];
            (highs[t] - lows[t]).max((highs[t] - prev).abs()).max((lows[t] - prev).abs())
        })
        .collect();
    Ok(tr.windows(n).map(|w| w.iter().sum::<f64>() / n as f64).collect())
}
