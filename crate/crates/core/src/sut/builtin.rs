//! Built-in subject functions and their hand-seeded mutants.
//!
//! Order-insensitive functions accumulate over a sorted copy of their input,
//! which makes them exactly (not just approximately) permutation invariant.
//! Mutants fail on exactly the inputs their parent fails on.

use crate::dsl::InputKind;
use crate::scalar::{canonical_sum, sorted, Scalar};

use super::{OracleFlag, OutputKind};

pub const EMPTY_INPUT: &str = "empty-input";

pub type Outcome<T> = Result<T, &'static str>;

#[derive(Clone, Copy)]
pub enum Kernel<T> {
    List(fn(&[T]) -> Outcome<T>),
    Scalar(fn(T) -> Outcome<T>),
}

pub struct BuiltinMutant<T> {
    pub id: String,
    pub description: &'static str,
    pub kernel: Kernel<T>,
}

pub struct BuiltinSut<T> {
    pub id: &'static str,
    pub input_kind: InputKind,
    pub output_kind: OutputKind,
    pub flags: &'static [OracleFlag],
    pub kernel: Kernel<T>,
    pub mutants: Vec<BuiltinMutant<T>>,
}

fn nonempty<T>(xs: &[T]) -> Outcome<()> {
    if xs.is_empty() {
        Err(EMPTY_INPUT)
    } else {
        Ok(())
    }
}

fn n_of<T: Scalar>(xs: &[T]) -> T {
    T::from_usize_lossy(xs.len())
}

fn count<T: Scalar>(xs: &[T], pred: impl Fn(T) -> bool) -> T {
    T::from_usize_lossy(xs.iter().filter(|&&x| pred(x)).count())
}

fn map_sum<T: Scalar>(xs: &[T], f: impl Fn(T) -> T) -> T {
    canonical_sum(&xs.iter().map(|&x| f(x)).collect::<Vec<_>>())
}

fn lit<T: Scalar>(v: f64) -> T {
    T::from_f64_lossy(v)
}

fn without_last<T>(xs: &[T]) -> &[T] {
    &xs[..xs.len().saturating_sub(1)]
}

fn fold_min<T: Scalar>(init: T, xs: &[T]) -> T {
    xs.iter().fold(init, |a, &x| if x < a { x } else { a })
}

fn fold_max<T: Scalar>(init: T, xs: &[T]) -> T {
    xs.iter().fold(init, |a, &x| if x > a { x } else { a })
}

// sum

fn sum<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(canonical_sum(xs))
}
fn sum_plus_to_minus<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(match xs.split_first() {
        None => T::zero(),
        Some((&first, rest)) => rest.iter().fold(first, |a, &x| a - x),
    })
}
fn sum_drop_last<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(canonical_sum(without_last(xs)))
}
fn sum_init_one<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(T::one() + canonical_sum(xs))
}

// product

fn product<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(sorted(xs).into_iter().fold(T::one(), |a, x| a * x))
}
fn product_times_to_plus<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(match xs.split_first() {
        None => T::one(),
        Some((&first, rest)) => rest.iter().fold(first, |a, &x| a + x),
    })
}
fn product_skip_first<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(xs.iter().skip(1).fold(T::one(), |a, &x| a * x))
}
fn product_abs_factors<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(sorted(xs).into_iter().fold(T::one(), |a, x| a * x.abs()))
}

// mean

fn mean<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(canonical_sum(xs) / n_of(xs))
}
fn mean_div_n_plus_1<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(canonical_sum(xs) / (n_of(xs) + T::one()))
}
fn mean_div_n_minus_1<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(canonical_sum(xs) / T::from_usize_lossy((xs.len() - 1).max(1)))
}
fn mean_missing_division<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(canonical_sum(xs))
}

// median

fn median<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    let s = sorted(xs);
    let n = s.len();
    Ok(if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / lit(2.0)
    })
}
fn median_upper<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(sorted(xs)[xs.len() / 2])
}
fn median_lower<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(sorted(xs)[(xs.len() - 1) / 2])
}
fn median_unsorted<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(xs[xs.len() / 2])
}

// min / max

fn min<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(fold_min(xs[0], xs))
}
fn min_flipped<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(fold_max(xs[0], xs))
}
fn min_init_zero<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(fold_min(T::zero(), xs))
}
fn min_skip_last<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(fold_min(xs[0], without_last(xs)))
}
fn max<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(fold_max(xs[0], xs))
}
fn max_flipped<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(fold_min(xs[0], xs))
}
fn max_init_zero<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(fold_max(T::zero(), xs))
}
fn max_skip_last<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(fold_max(xs[0], without_last(xs)))
}

// range_span

fn range_span<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(max(xs)? - min(xs)?)
}
fn range_span_plus<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(max(xs)? + min(xs)?)
}
fn range_span_minus_first<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(max(xs)? - xs[0])
}

// counting predicates

fn count_positive<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(count(xs, |x| x > T::zero()))
}
fn count_positive_ge<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(count(xs, |x| x >= T::zero()))
}
fn count_positive_bound<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(count(xs, |x| x > T::one()))
}
fn count_negative<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(count(xs, |x| x < T::zero()))
}
fn count_negative_le<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(count(xs, |x| x <= T::zero()))
}
fn count_negative_bound<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(count(xs, |x| x < -T::one()))
}

// absolute / power sums

fn abs_sum<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(map_sum(xs, |x| x.abs()))
}
fn abs_sum_dropped_abs<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(canonical_sum(xs))
}
fn abs_sum_abs_of_total<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(canonical_sum(xs).abs())
}
fn sum_of_squares<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(map_sum(xs, |x| x * x))
}
fn sum_of_squares_double<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(map_sum(xs, |x| x + x))
}
fn sum_of_squares_signed<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(map_sum(xs, |x| x * x.abs()))
}
fn sum_of_squares_drop_last<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(map_sum(without_last(xs), |x| x * x))
}
fn clamp<T: Scalar>(x: T, lo: f64, hi: f64) -> T {
    x.max(lit(lo)).min(lit(hi))
}
fn clamped_sum<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(map_sum(xs, |x| clamp(x, -10.0, 10.0)))
}
fn clamped_sum_upper_bound<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(map_sum(xs, |x| clamp(x, -10.0, 11.0)))
}
fn clamped_sum_no_lower<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(map_sum(xs, |x| x.min(lit(10.0))))
}
fn sum_of_cubes<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(map_sum(xs, |x| x * x * x))
}
fn sum_of_cubes_square<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(map_sum(xs, |x| x * x))
}
fn sum_of_cubes_skip_first<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(map_sum(xs.get(1..).unwrap_or(&[]), |x| x * x * x))
}
fn l2_norm<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(map_sum(xs, |x| x * x).sqrt())
}
fn l2_norm_missing_sqrt<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(map_sum(xs, |x| x * x))
}
fn l2_norm_l1<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(map_sum(xs, |x| x.abs()))
}

// ordering

fn sorted_check<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(if xs.windows(2).all(|w| w[0] <= w[1]) { T::one() } else { T::zero() })
}
fn sorted_check_strict<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(if xs.windows(2).all(|w| w[0] < w[1]) { T::one() } else { T::zero() })
}
fn sorted_check_first_pair<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(if xs.windows(2).take(1).all(|w| w[0] <= w[1]) { T::one() } else { T::zero() })
}
fn sorted_check_descending<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(if xs.windows(2).all(|w| w[0] >= w[1]) { T::one() } else { T::zero() })
}

// dispersion

fn squared_deviations<T: Scalar>(xs: &[T], f: impl Fn(T) -> T) -> T {
    let mu = canonical_sum(xs) / n_of(xs);
    map_sum(xs, |x| f(x - mu))
}
fn variance<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(squared_deviations(xs, |d| d * d) / n_of(xs))
}
fn variance_sample<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(squared_deviations(xs, |d| d * d) / T::from_usize_lossy((xs.len() - 1).max(1)))
}
fn variance_missing_square<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(squared_deviations(xs, |d| d.abs()) / n_of(xs))
}
fn std_dev<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(variance(xs)?.sqrt())
}
fn std_dev_missing_sqrt<T: Scalar>(xs: &[T]) -> Outcome<T> {
    variance(xs)
}
fn std_dev_sample<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(variance_sample(xs)?.sqrt())
}

fn log_sum_exp<T: Scalar>(xs: &[T]) -> Outcome<T> {
    let m = max(xs)?;
    Ok(m + map_sum(xs, |x| (x - m).exp()).ln())
}
fn log_sum_exp_unshifted<T: Scalar>(xs: &[T]) -> Outcome<T> {
    let m = max(xs)?;
    Ok(map_sum(xs, |x| (x - m).exp()).ln())
}
fn log_sum_exp_plain_max<T: Scalar>(xs: &[T]) -> Outcome<T> {
    max(xs)
}

// positional

fn first_element<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(xs[0])
}
fn first_element_second<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(*xs.get(1).unwrap_or(&xs[0]))
}
fn last_element<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(xs[xs.len() - 1])
}
fn last_element_second_to_last<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(if xs.len() >= 2 { xs[xs.len() - 2] } else { xs[0] })
}

fn max_abs<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(xs.iter().fold(T::zero(), |a, &x| a.max(x.abs())))
}
fn max_abs_min<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(xs.iter().fold(xs[0].abs(), |a, &x| a.min(x.abs())))
}
fn mean_abs<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(map_sum(xs, |x| x.abs()) / n_of(xs))
}
fn mean_abs_div_n_plus_1<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    Ok(map_sum(xs, |x| x.abs()) / (n_of(xs) + T::one()))
}

fn distinct_sorted<T: Scalar>(xs: &[T]) -> usize {
    let s = sorted(xs);
    let dups = s.windows(2).filter(|w| w[0] == w[1]).count();
    s.len() - dups
}
fn count_distinct<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(T::from_usize_lossy(distinct_sorted(xs)))
}
fn count_distinct_adjacent<T: Scalar>(xs: &[T]) -> Outcome<T> {
    let changes = xs.windows(2).filter(|w| w[0] != w[1]).count();
    Ok(T::from_usize_lossy(if xs.is_empty() { 0 } else { changes + 1 }))
}
fn count_distinct_off_by_one<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(T::from_usize_lossy(distinct_sorted(xs).saturating_sub(1)))
}

fn weighted<T: Scalar>(xs: &[T], w: impl Fn(usize) -> usize) -> T {
    xs.iter()
        .enumerate()
        .fold(T::zero(), |a, (i, &x)| a + T::from_usize_lossy(w(i)) * x)
}
fn weighted_index_sum<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(weighted(xs, |i| i + 1))
}
fn weighted_index_sum_zero_based<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(weighted(xs, |i| i))
}
fn weighted_index_sum_reversed<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(weighted(xs, |i| xs.len() - i))
}

fn prefix_sums<T: Scalar>(xs: &[T]) -> Vec<T> {
    xs.iter()
        .scan(T::zero(), |acc, &x| {
            *acc = *acc + x;
            Some(*acc)
        })
        .collect()
}
fn max_prefix_sum<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    let p = prefix_sums(xs);
    Ok(fold_max(p[0], &p))
}
fn max_prefix_sum_excl_full<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    let p = prefix_sums(xs);
    Ok(fold_max(p[0], &p[..p.len().saturating_sub(1).max(1)]))
}
fn max_prefix_sum_min<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    let p = prefix_sums(xs);
    Ok(fold_min(p[0], &p))
}

fn count_above_mean<T: Scalar>(xs: &[T]) -> Outcome<T> {
    let mu = mean(xs)?;
    Ok(count(xs, |x| x > mu))
}
fn count_above_mean_ge<T: Scalar>(xs: &[T]) -> Outcome<T> {
    let mu = mean(xs)?;
    Ok(count(xs, |x| x >= mu))
}
fn count_above_mean_prefix<T: Scalar>(xs: &[T]) -> Outcome<T> {
    nonempty(xs)?;
    let mu = mean(&xs[..(xs.len() - 1).max(1)])?;
    Ok(count(xs, |x| x > mu))
}

fn length<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(n_of(xs))
}
fn length_minus_one<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(T::from_usize_lossy(xs.len().saturating_sub(1)))
}
fn length_nonzero<T: Scalar>(xs: &[T]) -> Outcome<T> {
    Ok(count(xs, |x| x != T::zero()))
}

// scalar SUTs

fn square<T: Scalar>(x: T) -> Outcome<T> {
    Ok(x * x)
}
fn square_double<T: Scalar>(x: T) -> Outcome<T> {
    Ok(x + x)
}
fn square_signed<T: Scalar>(x: T) -> Outcome<T> {
    Ok(x * x.abs())
}
fn abs_value<T: Scalar>(x: T) -> Outcome<T> {
    Ok(x.abs())
}
fn abs_value_dropped<T: Scalar>(x: T) -> Outcome<T> {
    Ok(x)
}
fn abs_value_negated<T: Scalar>(x: T) -> Outcome<T> {
    Ok(-x.abs())
}

use OracleFlag::{MonotoneInElements as MONO, OrderInsensitive as OI, SignSymmetric as SYM};

/// `(tag, description, kernel)` of a hand-seeded mutant.
type ListMutant<T> = (&'static str, &'static str, fn(&[T]) -> Outcome<T>);
type ScalarMutant<T> = (&'static str, &'static str, fn(T) -> Outcome<T>);

fn list<T: Scalar>(
    id: &'static str,
    output_kind: OutputKind,
    flags: &'static [OracleFlag],
    f: fn(&[T]) -> Outcome<T>,
    mutants: &[ListMutant<T>],
) -> BuiltinSut<T> {
    BuiltinSut {
        id,
        input_kind: InputKind::ListFloat,
        output_kind,
        flags,
        kernel: Kernel::List(f),
        mutants: mutants
            .iter()
            .map(|&(tag, description, m)| BuiltinMutant {
                id: format!("{id}_mutant_{tag}"),
                description,
                kernel: Kernel::List(m),
            })
            .collect(),
    }
}

fn scalar<T: Scalar>(
    id: &'static str,
    flags: &'static [OracleFlag],
    f: fn(T) -> Outcome<T>,
    mutants: &[ScalarMutant<T>],
) -> BuiltinSut<T> {
    BuiltinSut {
        id,
        input_kind: InputKind::ScalarFloat,
        output_kind: OutputKind::Float,
        flags,
        kernel: Kernel::Scalar(f),
        mutants: mutants
            .iter()
            .map(|&(tag, description, m)| BuiltinMutant {
                id: format!("{id}_mutant_{tag}"),
                description,
                kernel: Kernel::Scalar(m),
            })
            .collect(),
    }
}

/// The built-in corpus, instantiated for scalar type `T`.
pub fn builtin_suts<T: Scalar>() -> Vec<BuiltinSut<T>> {
    use OutputKind::{Float, Int};
    vec![
        list("sum", Float, &[OI, MONO], sum, &[
            ("plus_to_minus", "+ replaced by - (fold starts at first element)", sum_plus_to_minus),
            ("drop_last", "loop bound off by one: last element skipped", sum_drop_last),
            ("init_one", "accumulator initialised to 1 instead of 0", sum_init_one),
        ]),
        list("product", Float, &[OI], product, &[
            ("times_to_plus", "* replaced by + (fold starts at first element)", product_times_to_plus),
            ("skip_first", "loop starts at index 1", product_skip_first),
            ("abs_factors", "absolute value applied to each factor", product_abs_factors),
        ]),
        list("mean", Float, &[OI, MONO], mean, &[
            ("div_n_plus_1", "divisor n replaced by n + 1", mean_div_n_plus_1),
            ("div_n_minus_1", "divisor n replaced by max(n - 1, 1)", mean_div_n_minus_1),
            ("missing_division", "division by n dropped", mean_missing_division),
        ]),
        list("median", Float, &[OI, MONO], median, &[
            ("upper", "even length returns upper middle instead of the average", median_upper),
            ("lower", "even length returns lower middle instead of the average", median_lower),
            ("unsorted", "middle element taken without sorting", median_unsorted),
        ]),
        list("min", Float, &[OI, MONO], min, &[
            ("flipped", "comparison < replaced by >", min_flipped),
            ("init_zero", "accumulator initialised to 0 instead of first element", min_init_zero),
            ("skip_last", "loop bound off by one: last element skipped", min_skip_last),
        ]),
        list("max", Float, &[OI, MONO], max, &[
            ("flipped", "comparison > replaced by <", max_flipped),
            ("init_zero", "accumulator initialised to 0 instead of first element", max_init_zero),
            ("skip_last", "loop bound off by one: last element skipped", max_skip_last),
        ]),
        list("range_span", Float, &[OI, SYM], range_span, &[
            ("plus", "max - min replaced by max + min", range_span_plus),
            ("minus_first", "min replaced by first element", range_span_minus_first),
        ]),
        list("count_positive", Int, &[OI, MONO], count_positive, &[
            ("gt_to_ge", "> 0 replaced by >= 0", count_positive_ge),
            ("bound_off_by_one", "> 0 replaced by > 1", count_positive_bound),
        ]),
        list("count_negative", Int, &[OI], count_negative, &[
            ("lt_to_le", "< 0 replaced by <= 0", count_negative_le),
            ("bound_off_by_one", "< 0 replaced by < -1", count_negative_bound),
        ]),
        list("abs_sum", Float, &[OI, SYM], abs_sum, &[
            ("dropped_abs", "absolute value dropped", abs_sum_dropped_abs),
            ("abs_of_total", "absolute value moved outside the sum", abs_sum_abs_of_total),
        ]),
        list("sum_of_squares", Float, &[OI, SYM], sum_of_squares, &[
            ("double", "x * x replaced by x + x", sum_of_squares_double),
            ("signed", "x * x replaced by x * |x|", sum_of_squares_signed),
            ("drop_last", "loop bound off by one: last element skipped", sum_of_squares_drop_last),
        ]),
        list("clamped_sum", Float, &[OI, MONO], clamped_sum, &[
            ("upper_bound", "upper clamp 10 replaced by 11", clamped_sum_upper_bound),
            ("no_lower", "lower clamp dropped", clamped_sum_no_lower),
        ]),
        list("sorted_check", Int, &[], sorted_check, &[
            ("strict", "<= replaced by <", sorted_check_strict),
            ("first_pair", "only the first pair is compared", sorted_check_first_pair),
            ("descending", "<= replaced by >=", sorted_check_descending),
        ]),
        list("variance", Float, &[OI, SYM], variance, &[
            ("sample", "divisor n replaced by max(n - 1, 1)", variance_sample),
            ("missing_square", "squared deviation replaced by absolute deviation", variance_missing_square),
        ]),
        list("std_dev", Float, &[OI, SYM], std_dev, &[
            ("missing_sqrt", "square root dropped", std_dev_missing_sqrt),
            ("sample", "divisor n replaced by max(n - 1, 1)", std_dev_sample),
        ]),
        list("log_sum_exp", Float, &[OI, MONO], log_sum_exp, &[
            ("unshifted", "max shift not added back", log_sum_exp_unshifted),
            ("plain_max", "log-sum replaced by max", log_sum_exp_plain_max),
        ]),
        list("first_element", Float, &[MONO], first_element, &[
            ("second", "index 0 replaced by 1 when available", first_element_second),
            ("last", "index 0 replaced by n - 1", last_element),
        ]),
        list("last_element", Float, &[MONO], last_element, &[
            ("first", "index n - 1 replaced by 0", first_element),
            ("second_to_last", "index n - 1 replaced by n - 2 when available", last_element_second_to_last),
        ]),
        list("max_abs", Float, &[OI, SYM], max_abs, &[
            ("dropped_abs", "absolute value dropped", max),
            ("min", "max replaced by min", max_abs_min),
        ]),
        list("mean_abs", Float, &[OI, SYM], mean_abs, &[
            ("dropped_abs", "absolute value dropped", mean),
            ("div_n_plus_1", "divisor n replaced by n + 1", mean_abs_div_n_plus_1),
        ]),
        list("l2_norm", Float, &[OI, SYM], l2_norm, &[
            ("missing_sqrt", "square root dropped", l2_norm_missing_sqrt),
            ("l1", "x * x replaced by |x| and square root dropped", l2_norm_l1),
        ]),
        list("sum_of_cubes", Float, &[OI, MONO], sum_of_cubes, &[
            ("square", "x^3 replaced by x^2", sum_of_cubes_square),
            ("skip_first", "loop starts at index 1", sum_of_cubes_skip_first),
        ]),
        list("count_distinct", Int, &[OI, SYM], count_distinct, &[
            ("adjacent", "counts value changes without sorting first", count_distinct_adjacent),
            ("off_by_one", "result decremented by one", count_distinct_off_by_one),
        ]),
        list("weighted_index_sum", Float, &[MONO], weighted_index_sum, &[
            ("zero_based", "weight i + 1 replaced by i", weighted_index_sum_zero_based),
            ("reversed", "weight i + 1 replaced by n - i", weighted_index_sum_reversed),
        ]),
        list("max_prefix_sum", Float, &[MONO], max_prefix_sum, &[
            ("excl_full", "full-length prefix skipped (loop bound off by one)", max_prefix_sum_excl_full),
            ("min", "max replaced by min", max_prefix_sum_min),
        ]),
        list("count_above_mean", Int, &[OI], count_above_mean, &[
            ("gt_to_ge", "> mean replaced by >= mean", count_above_mean_ge),
            ("prefix_mean", "mean computed without the last element", count_above_mean_prefix),
        ]),
        list("length", Int, &[OI, SYM, MONO], length, &[
            ("minus_one", "result decremented by one", length_minus_one),
            ("nonzero", "counts only nonzero elements", length_nonzero),
        ]),
        scalar("square", &[SYM], square, &[
            ("double", "x * x replaced by x + x", square_double),
            ("signed", "x * x replaced by x * |x|", square_signed),
        ]),
        scalar("abs_value", &[SYM], abs_value, &[
            ("dropped_abs", "absolute value dropped", abs_value_dropped),
            ("negated", "result negated", abs_value_negated),
        ]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel<'a>(suts: &'a [BuiltinSut<f64>], id: &str) -> &'a Kernel<f64> {
        &suts.iter().find(|s| s.id == id).unwrap().kernel
    }

    fn call(k: &Kernel<f64>, xs: &[f64]) -> Outcome<f64> {
        match k {
            Kernel::List(f) => f(xs),
            Kernel::Scalar(f) => f(xs[0]),
        }
    }

    #[test]
    fn reference_values() {
        let suts = builtin_suts::<f64>();
        let x = [3.0, -1.0, 2.0, 2.0];
        let cases = [
            ("sum", 6.0),
            ("product", -12.0),
            ("mean", 1.5),
            ("median", 2.0),
            ("min", -1.0),
            ("max", 3.0),
            ("range_span", 4.0),
            ("count_positive", 3.0),
            ("count_negative", 1.0),
            ("abs_sum", 8.0),
            ("sum_of_squares", 18.0),
            ("clamped_sum", 6.0),
            ("sorted_check", 0.0),
            ("variance", 2.25),
            ("std_dev", 1.5),
            ("first_element", 3.0),
            ("last_element", 2.0),
            ("max_abs", 3.0),
            ("mean_abs", 2.0),
            ("sum_of_cubes", 42.0),
            ("count_distinct", 3.0),
            ("weighted_index_sum", 3.0 - 2.0 + 6.0 + 8.0),
            ("max_prefix_sum", 6.0),
            ("count_above_mean", 3.0),
            ("length", 4.0),
        ];
        for (id, want) in cases {
            assert_eq!(call(kernel(&suts, id), &x), Ok(want), "{id}");
        }
        assert!((call(kernel(&suts, "l2_norm"), &x).unwrap() - 18f64.sqrt()).abs() < 1e-15);
        let lse = call(kernel(&suts, "log_sum_exp"), &x).unwrap();
        let direct = x.iter().map(|v: &f64| v.exp()).sum::<f64>().ln();
        assert!((lse - direct).abs() < 1e-12);
        assert_eq!(call(kernel(&suts, "square"), &[-3.0]), Ok(9.0));
    }

    #[test]
    fn empty_input_failures() {
        let suts = builtin_suts::<f64>();
        assert_eq!(call(kernel(&suts, "min"), &[]), Err(EMPTY_INPUT));
        assert_eq!(call(kernel(&suts, "sum"), &[]), Ok(0.0));
    }

    #[test]
    fn sum_plus_to_minus_golden() {
        assert_eq!(sum_plus_to_minus(&[1.0, 2.0, 3.0]), Ok(-4.0));
    }

    #[test]
    fn corpus_shape() {
        let suts = builtin_suts::<f64>();
        let list_float = suts.iter().filter(|s| s.input_kind == InputKind::ListFloat).count();
        assert!(list_float >= 25);
        for s in &suts {
            assert!((2..=4).contains(&s.mutants.len()), "{}", s.id);
        }
    }
}
