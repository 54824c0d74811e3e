//! Literal values shared by the IR, the knowledge base, constant propagation
//! and the test oracle.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A concrete literal value the analysis can reason about. Byte sequences
/// cover `new byte[]{..}` literals and `getBytes()` over constant strings;
/// they are what hardcoded-key detection ultimately inspects.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Value {
    Str(String),
    Int(i64),
    Bool(bool),
    Null,
    Bytes(Vec<u8>),
}

impl Value {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_bytes(&self) -> Option<&[u8]> {
        match self {
            Value::Bytes(b) => Some(b),
            _ => None,
        }
    }

    /// Length in bits of key-like material, when derivable from the value.
    /// Strings count one byte per UTF-8 byte, matching `String.getBytes()`.
    pub fn size_bits(&self) -> Option<u32> {
        match self {
            Value::Bytes(b) => Some(b.len() as u32 * 8),
            Value::Str(s) => Some(s.len() as u32 * 8),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => write!(f, "{s}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Null => write!(f, "null"),
            Value::Bytes(b) => {
                write!(f, "0x")?;
                for byte in b {
                    write!(f, "{byte:02x}")?;
                }
                Ok(())
            }
        }
    }
}
