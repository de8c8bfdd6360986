//! Scalar abstraction and the flop-counting scalar.
//!
//! Every kernel in this crate is generic over [`Scalar`]. Running a kernel over
//! [`Flop`] instead of `f32`/`f64` tallies one unit per add/sub, mul, div and
//! sqrt into a per-thread [`FlopTally`], which is how the simulated hardware
//! measures cost without a separate cost model.

use std::cell::Cell;
use std::fmt::{self, Debug, Display};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Scalar:
    Copy
    + Send
    + Sync
    + Default
    + Debug
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + 'static
{
    const ZERO: Self;
    const ONE: Self;
    /// Short name used in reports (`f32`, `f64`, `flop`).
    const NAME: &'static str;
    /// Machine epsilon of the underlying float format.
    const EPS: f64;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    /// Absolute value. Not counted as a flop.
    fn abs(self) -> Self;

    fn is_finite(self) -> bool {
        self.to_f64().is_finite()
    }
}

macro_rules! impl_float {
    ($t:ty) => {
        impl Scalar for $t {
            const ZERO: Self = 0.0;
            const ONE: Self = 1.0;
            const NAME: &'static str = stringify!($t);
            const EPS: f64 = <$t>::EPSILON as f64;

            #[inline]
            fn from_f64(v: f64) -> Self {
                v as $t
            }
            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }
            #[inline]
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }
            #[inline]
            fn abs(self) -> Self {
                <$t>::abs(self)
            }
        }
    };
}

impl_float!(f32);
impl_float!(f64);

/// Counts of scalar floating point operations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct FlopTally {
    pub adds: u64,
    pub muls: u64,
    pub divs: u64,
    pub sqrts: u64,
}

impl FlopTally {
    pub const ZERO: FlopTally = FlopTally { adds: 0, muls: 0, divs: 0, sqrts: 0 };

    pub fn total(&self) -> u64 {
        self.adds + self.muls + self.divs + self.sqrts
    }

    /// A tally of `n` additions; handy as a unit cost.
    pub fn adds(n: u64) -> Self {
        FlopTally { adds: n, ..Self::ZERO }
    }
}

impl Add for FlopTally {
    type Output = FlopTally;
    fn add(self, o: FlopTally) -> FlopTally {
        FlopTally {
            adds: self.adds + o.adds,
            muls: self.muls + o.muls,
            divs: self.divs + o.divs,
            sqrts: self.sqrts + o.sqrts,
        }
    }
}

impl AddAssign for FlopTally {
    fn add_assign(&mut self, o: FlopTally) {
        *self = *self + o;
    }
}

impl Sum for FlopTally {
    fn sum<I: Iterator<Item = FlopTally>>(iter: I) -> Self {
        iter.fold(FlopTally::ZERO, |a, b| a + b)
    }
}

thread_local! {
    static TALLY: Cell<FlopTally> = const { Cell::new(FlopTally::ZERO) };
}

#[inline]
fn bump(f: impl FnOnce(&mut FlopTally)) {
    TALLY.with(|t| {
        let mut v = t.get();
        f(&mut v);
        t.set(v);
    });
}

/// Adds `cost` to the current thread's tally.
///
/// Used by cost-model operators that stand in for a real computation whose
/// flop count is already known.
#[inline]
pub fn charge(cost: FlopTally) {
    bump(|t| *t += cost);
}

/// Runs `f` and returns the flops it performed on the current thread.
///
/// Nested calls are supported: the inner tally is also added to the enclosing
/// one when `f` returns.
pub fn with_flop_counting<R>(f: impl FnOnce() -> R) -> (R, FlopTally) {
    let outer = TALLY.with(|t| t.replace(FlopTally::ZERO));
    let result = f();
    let inner = TALLY.with(|t| t.replace(FlopTally::ZERO));
    TALLY.with(|t| t.set(outer + inner));
    (result, inner)
}

/// An `f64` that records every arithmetic operation in the thread-local tally.
#[derive(Clone, Copy, Default, PartialEq, PartialOrd)]
pub struct Flop(pub f64);

impl Debug for Flop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Debug::fmt(&self.0, f)
    }
}

impl Display for Flop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Display::fmt(&self.0, f)
    }
}

macro_rules! counted_op {
    ($tr:ident, $m:ident, $atr:ident, $am:ident, $field:ident, $op:tt) => {
        #[allow(clippy::suspicious_arithmetic_impl)]
        impl $tr for Flop {
            type Output = Flop;
            #[inline]
            fn $m(self, o: Flop) -> Flop {
                bump(|t| t.$field += 1);
                Flop(self.0 $op o.0)
            }
        }
        impl $atr for Flop {
            #[inline]
            fn $am(&mut self, o: Flop) {
                *self = $tr::$m(*self, o);
            }
        }
    };
}

counted_op!(Add, add, AddAssign, add_assign, adds, +);
counted_op!(Sub, sub, SubAssign, sub_assign, adds, -);
counted_op!(Mul, mul, MulAssign, mul_assign, muls, *);
counted_op!(Div, div, DivAssign, div_assign, divs, /);

impl Neg for Flop {
    type Output = Flop;
    #[inline]
    fn neg(self) -> Flop {
        Flop(-self.0)
    }
}

impl Scalar for Flop {
    const ZERO: Self = Flop(0.0);
    const ONE: Self = Flop(1.0);
    const NAME: &'static str = "flop";
    const EPS: f64 = f64::EPSILON;

    fn from_f64(v: f64) -> Self {
        Flop(v)
    }
    fn to_f64(self) -> f64 {
        self.0
    }
    fn sqrt(self) -> Self {
        bump(|t| t.sqrts += 1);
        Flop(self.0.sqrt())
    }
    fn abs(self) -> Self {
        Flop(self.0.abs())
    }
}
