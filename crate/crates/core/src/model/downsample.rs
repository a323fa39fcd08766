use crate::error::{Error, Result};

/// Indices kept when subsampling a length-`len` sequence with `stride`,
/// anchored at the final step: `len-1, len-1-stride, …` returned in
/// chronological order.
pub fn downsample_indices(len: usize, stride: usize) -> Result<Vec<usize>> {
    if stride < 1 {
        return Err(Error::InvalidConfig("downsample stride must be at least 1".into()));
    }
    if len == 0 {
        return Err(Error::EmptySequence("downsample"));
    }
    let mut idx: Vec<usize> = (0..len).rev().step_by(stride).collect();
    idx.reverse();
    Ok(idx)
}

/// Stride-subsamples `items`, always keeping the last element.
pub fn downsample<T: Clone>(items: &[T], stride: usize) -> Result<Vec<T>> {
    Ok(downsample_indices(items.len(), stride)?.into_iter().map(|i| items[i].clone()).collect())
}

/// Number of elements [`downsample_indices`] keeps: ⌈len/stride⌉.
pub fn downsampled_len(len: usize, stride: usize) -> usize {
    len.div_ceil(stride)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stride_one_is_identity() {
        let v: Vec<u32> = (0..9).collect();
        assert_eq!(downsample(&v, 1).unwrap(), v);
    }

    #[test]
    fn nws_daily_ticks() {
        let idx = downsample_indices(720, 4).unwrap();
        assert_eq!(idx.len(), 180);
        assert_eq!(*idx.last().unwrap(), 719);
    }

    #[test]
    fn odd_length() {
        assert_eq!(downsample_indices(5, 2).unwrap(), vec![0, 2, 4]);
    }

    #[test]
    fn zero_stride_rejected() {
        assert!(downsample_indices(5, 0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn length_and_anchor(len in 1usize..2000, stride in 1usize..60) {
                let idx = downsample_indices(len, stride).unwrap();
                prop_assert_eq!(idx.len(), downsampled_len(len, stride));
                prop_assert_eq!(*idx.last().unwrap(), len - 1);
                prop_assert!(idx.windows(2).all(|w| w[1] - w[0] == stride));
            }
        }
    }
}
