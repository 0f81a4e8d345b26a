use serde_json::{json, Value};

use crate::document::NumericMode;
use crate::lattice::SubsetTable;
use crate::operator::Operator;
use crate::scalar::{format_rational, rational_to_f64, Entry, ExactComplex, Rational, C64};

/// Report encoding: exact values as `"p/q"` strings, floating values as
/// numbers, complex values with a nonzero imaginary part as `[re, im]`.
pub trait ToJson {
    fn to_json(&self) -> Value;
}

impl ToJson for Rational {
    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }
}

impl ToJson for f64 {
    fn to_json(&self) -> Value {
        float(*self)
    }
}

impl ToJson for C64 {
    fn to_json(&self) -> Value {
        if self.im == 0.0 {
            float(self.re)
        } else {
            json!([float(self.re), float(self.im)])
        }
    }
}

impl ToJson for ExactComplex {
    fn to_json(&self) -> Value {
        if num_traits::Zero::is_zero(&self.im) {
            self.re.to_json()
        } else {
            json!([self.re.to_json(), self.im.to_json()])
        }
    }
}

/// Non-finite values become `null`.
pub fn float(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// A rational reported in the requested mode.
pub fn rational(r: &Rational, mode: NumericMode) -> Value {
    match mode {
        NumericMode::Exact => r.to_json(),
        NumericMode::Double => float(rational_to_f64(r)),
    }
}

pub fn matrix<E: Entry + ToJson>(op: &Operator<E>) -> Value {
    Value::Array((0..op.dim()).map(|r| Value::Array(op.row(r).iter().map(ToJson::to_json).collect())).collect())
}

pub fn list<T: ToJson>(values: &[T]) -> Value {
    Value::Array(values.iter().map(ToJson::to_json).collect())
}

pub fn table<V>(t: &SubsetTable<V>, f: impl Fn(&V) -> Value) -> Value {
    Value::Array(t.iter().map(|(s, v)| json!({"set": s.to_string(), "value": f(v)})).collect())
}
