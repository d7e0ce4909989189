use rand::Rng;

use super::RegressError;

fn fraction_count(frac: f64, n: usize) -> usize {
    (((frac * n as f64) - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Gradient-based one-side sampling.
///
/// Keeps the top `⌈a·n⌉` rows by |gradient| with weight 1 and draws `⌈b·n⌉`
/// of the remaining rows uniformly without replacement, weighting them by
/// `(1 − a)/b`. Indices come back in ascending order with their weights.
pub fn goss_sample<R: Rng + ?Sized>(
    gradients: &[f64],
    a: f64,
    b: f64,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<f64>), RegressError> {
    let n = gradients.len();
    if n == 0 {
        return Err(RegressError::EmptyInput);
    }
    if !(a > 0.0 && b >= 0.0 && a + b <= 1.0 + 1e-12) {
        return Err(RegressError::InvalidParams(format!(
            "goss fractions a={a}, b={b} must satisfy 0 < a, 0 <= b, a + b <= 1"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| gradients[j].abs().total_cmp(&gradients[i].abs()).then(i.cmp(&j)));
    let top = fraction_count(a, n);
    let rest = &order[top..];
    let draw = if b > 0.0 {
        fraction_count(b, n).min(rest.len())
    } else {
        0
    };

    let mut picked: Vec<(usize, f64)> = order[..top].iter().map(|&i| (i, 1.0)).collect();
    if draw > 0 {
        let weight = (1.0 - a) / b;
        picked.extend(
            rand::seq::index::sample(rng, rest.len(), draw)
                .into_iter()
                .map(|k| (rest[k], weight)),
        );
    }
    picked.sort_by_key(|p| p.0);
    Ok(picked.into_iter().unzip())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_sample_when_a_is_one() {
        let g: Vec<f64> = (0..7).map(|i| i as f64 - 3.0).collect();
        let (idx, w) = goss_sample(&g, 1.0, 0.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(idx, (0..7).collect::<Vec<_>>());
        assert!(w.iter().all(|w| *w == 1.0));
    }

    #[test]
    fn top_and_reweighted_rest() {
        let g = [0.1, -5.0, 0.2, 0.3, 4.0, 0.0, -0.1, 0.2, 0.05, 0.01];
        let (idx, w) = goss_sample(&g, 0.2, 0.2, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(idx.len(), 4);
        let tops: Vec<_> = idx
            .iter()
            .zip(&w)
            .filter(|(_, w)| **w == 1.0)
            .map(|(i, _)| *i)
            .collect();
        assert_eq!(tops, vec![1, 4]);
        let rest: Vec<_> = w.iter().filter(|w| **w != 1.0).collect();
        assert_eq!(rest.len(), 2);
        assert!(rest.iter().all(|w| (**w - 4.0).abs() < 1e-12));
    }

    #[test]
    fn reproducible_under_seed() {
        let g: Vec<f64> = (0..100).map(|i| ((i * 7919) % 101) as f64).collect();
        let a = goss_sample(&g, 0.1, 0.3, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = goss_sample(&g, 0.1, 0.3, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(goss_sample(&[], 0.2, 0.2, &mut rng), Err(RegressError::EmptyInput));
        assert!(goss_sample(&[1.0], 0.8, 0.5, &mut rng).is_err());
        assert!(goss_sample(&[1.0], 0.0, 0.5, &mut rng).is_err());
    }
}
