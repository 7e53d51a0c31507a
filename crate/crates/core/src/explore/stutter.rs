use crate::value::Value;

/// Checks that `reads` is a stuttering subsequence of `writes`: every read
/// value can be matched to a position of the write sequence such that the
/// matched positions never decrease. On failure returns the index of the
/// first read that cannot be matched.
///
/// Matching each read to the earliest admissible position is optimal, so a
/// single greedy pass decides the question.
pub fn check_stutter(writes: &[Value], reads: &[Value]) -> Result<(), usize> {
    let mut at = 0usize;
    for (i, r) in reads.iter().enumerate() {
        match writes[at..].iter().position(|w| w == r) {
            Some(off) => at += off,
            None => return Err(i),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(xs: &[i64]) -> Vec<Value> {
        xs.iter().map(|&x| Value::Int(x)).collect()
    }

    #[test]
    fn examples() {
        let w = ints(&[1, 2, 3, 4, 5]);
        assert_eq!(check_stutter(&w, &ints(&[1, 1, 3, 3, 5])), Ok(()));
        assert_eq!(check_stutter(&w, &ints(&[1, 4, 3])), Err(2));
        assert_eq!(check_stutter(&w, &[]), Ok(()));
        assert_eq!(check_stutter(&w, &ints(&[6])), Err(0));
        assert_eq!(check_stutter(&[], &ints(&[1])), Err(0));
    }
}
