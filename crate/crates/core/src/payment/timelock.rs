use super::PaymentError;
use crate::Round;

/// Single-path deadlines `t_0 = ct + |p| + 1`, `t_{i+1} = t_i − 1`.
///
/// Returns `[t_0, …, t_|p|]`.
pub fn timelocks_single(ct: Round, hops: usize) -> Vec<Round> {
    let t0 = ct + hops as Round + 1;
    (0..=hops as Round).map(|i| t0 - i).collect()
}

/// Round schedule for a multi-path delivery.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiTimelocks {
    /// Longest path, in relayers.
    pub max_len: usize,
    /// `T_1`: delivery must finish by this round.
    pub t1: Round,
    /// `T_2`: enforcement must start before this round.
    pub t2: Round,
    /// `t_0`: deadline of the customer's payment.
    pub customer: Round,
    /// `relays[k][i-1] = t_{k,i}`.
    pub relays: Vec<Vec<Round>>,
}

impl MultiTimelocks {
    pub fn relay(&self, path: usize, hop: usize) -> Round {
        self.relays[path][hop - 1]
    }

    /// Last round in which hop `i` may still forward its lock and ack.
    pub fn lock_deadline(&self, hop: usize) -> Round {
        self.t1 + hop as Round + 1
    }

    /// Last round in which the provider may receive the final receipt.
    pub fn receipt_deadline(&self) -> Round {
        self.t1 + self.max_len as Round + 2
    }
}

/// `T_1 = 5 + max|p_k|`, `T_2 = T_1 + 2·max + 5`, `t_0 = T_2 + max + 2`,
/// `t_{k,i} = T_2 + |p_k| − i + 2`.
pub fn timelocks_multi(lengths: &[usize]) -> Result<MultiTimelocks, PaymentError> {
    let max_len = *lengths.iter().max().ok_or(PaymentError::NoPaths)?;
    let max = max_len as Round;
    let t1 = 5 + max;
    let t2 = t1 + 2 * max + 5;
    let relays = lengths
        .iter()
        .map(|&len| (1..=len).map(|i| t2 + len as Round - i as Round + 2).collect())
        .collect();
    Ok(MultiTimelocks {
        max_len,
        t1,
        t2,
        customer: t2 + max + 2,
        relays,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_path_example() {
        assert_eq!(timelocks_single(10, 2), vec![13, 12, 11]);
        assert_eq!(timelocks_single(0, 0), vec![1]);
    }

    #[test]
    fn two_paths_of_two_and_three() {
        let t = timelocks_multi(&[2, 3]).unwrap();
        assert_eq!((t.t1, t.t2, t.customer), (8, 19, 24));
        assert_eq!(t.relay(1, 1), 23);
        assert_eq!(t.relay(1, 3), 21);
        assert_eq!(t.relays[0], vec![22, 21]);
        assert_eq!(t.receipt_deadline(), 13);
    }

    #[test]
    fn no_paths_is_an_error() {
        assert_eq!(timelocks_multi(&[]), Err(PaymentError::NoPaths));
    }
}
