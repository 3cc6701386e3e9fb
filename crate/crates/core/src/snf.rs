//! Integer matrix utilities: gcd and Smith normal form over the integers.
//! Dimensions here are tiny (d x k with k <= 6), entries come from enumeration
//! boxes; i128 intermediates keep the row/column reduction exact.

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn gcd_slice(v: &[i64]) -> i64 {
    v.iter().fold(0, |g, &x| gcd(g, x))
}

/// Elementary divisors d_1 | d_2 | ... of an integer matrix, all non-negative.
/// Trailing zero divisors are returned for rank-deficient inputs.
pub fn smith_divisors(rows: &[Vec<i64>]) -> Vec<i64> {
    let r = rows.len();
    if r == 0 {
        return Vec::new();
    }
    let c = rows[0].len();
    let mut a: Vec<Vec<i128>> =
        rows.iter().map(|row| row.iter().map(|&x| x as i128).collect()).collect();
    let n = r.min(c);
    let mut divisors = Vec::with_capacity(n);

    for t in 0..n {
        loop {
            // smallest nonzero entry in the working block becomes the pivot
            let mut pivot: Option<(usize, usize)> = None;
            for i in t..r {
                for j in t..c {
                    if a[i][j] != 0
                        && pivot.map_or(true, |(pi, pj)| a[i][j].abs() < a[pi][pj].abs())
                    {
                        pivot = Some((i, j));
                    }
                }
            }
            let (pi, pj) = match pivot {
                Some(p) => p,
                None => {
                    for _ in t..n {
                        divisors.push(0);
                    }
                    return divisors;
                }
            };
            a.swap(t, pi);
            for row in a.iter_mut() {
                row.swap(t, pj);
            }
            if a[t][t] < 0 {
                for j in 0..c {
                    a[t][j] = -a[t][j];
                }
            }

            let p = a[t][t];
            let mut clean = true;
            for i in t + 1..r {
                let q = a[i][t].div_euclid(p);
                if q != 0 {
                    for j in 0..c {
                        a[i][j] -= q * a[t][j];
                    }
                }
                if a[i][t] != 0 {
                    clean = false;
                }
            }
            for j in t + 1..c {
                let q = a[t][j].div_euclid(p);
                if q != 0 {
                    for i in 0..r {
                        a[i][j] -= q * a[i][t];
                    }
                }
                if a[t][j] != 0 {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // pivot must divide the rest of the block for the divisor chain
            let mut fixed = true;
            'outer: for i in t + 1..r {
                for j in t + 1..c {
                    if a[i][j] % p != 0 {
                        for jj in 0..c {
                            a[t][jj] += a[i][jj];
                        }
                        fixed = false;
                        break 'outer;
                    }
                }
            }
            if fixed {
                break;
            }
        }
        divisors.push(i64::try_from(a[t][t]).expect("divisor exceeds i64"));
    }
    divisors
}
