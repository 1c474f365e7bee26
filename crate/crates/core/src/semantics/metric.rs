use super::SemanticsError;

fn same_dim(a: &[f64], b: &[f64]) -> Result<(), SemanticsError> {
    if a.len() != b.len() {
        return Err(SemanticsError::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64, SemanticsError> {
    same_dim(a, b)?;
    Ok(euclidean_unchecked(a, b))
}

pub(crate) fn euclidean_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity, clamped to [-1, 1] against rounding.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, SemanticsError> {
    same_dim(a, b)?;
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(SemanticsError::ZeroVector);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Arithmetic mean of the given rows.
pub fn centroid<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Option<Vec<f64>> {
    let mut iter = rows.into_iter();
    let mut sum = iter.next()?.to_vec();
    let mut count = 1.0;
    for row in iter {
        for (s, x) in sum.iter_mut().zip(row) {
            *s += x;
        }
        count += 1.0;
    }
    for s in &mut sum {
        *s /= count;
    }
    Some(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basics() {
        assert_eq!(euclidean(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(euclidean(&[1.5, -2.0], &[1.5, -2.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 2.0], &[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine(&[1.0, 0.0], &[-2.0, 0.0]).unwrap(), -1.0);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(SemanticsError::ZeroVector));
        assert!(matches!(
            euclidean(&[1.0], &[1.0, 2.0]),
            Err(SemanticsError::DimensionMismatch { .. })
        ));
        assert_eq!(
            centroid([&[0.0, 2.0][..], &[2.0, 0.0][..]]).unwrap(),
            vec![1.0, 1.0]
        );
    }
}
