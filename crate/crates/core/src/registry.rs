//! Name-keyed constructor tables for the pluggable strategies (shear flows,
//! initial data, weights, stream-function solvers).

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub type Constructor<T, P> = fn(&P) -> Result<Box<T>>;

pub struct Registry<T: ?Sized, P> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Constructor<T, P>>,
}

impl<T: ?Sized, P> Registry<T, P> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Adds or replaces an entry.
    pub fn register(mut self, name: &'static str, ctor: Constructor<T, P>) -> Self {
        self.entries.insert(name, ctor);
        self
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn create(&self, name: &str, params: &P) -> Result<Box<T>> {
        match self.entries.get(name) {
            Some(ctor) => ctor(params),
            None => Err(Error::UnknownStrategy {
                registry: self.kind,
                name: name.to_string(),
                known: self.names().join(", "),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Shape {
        fn area(&self) -> f64;
    }
    struct Square(f64);
    impl Shape for Square {
        fn area(&self) -> f64 {
            self.0 * self.0
        }
    }

    #[test]
    fn unknown_names_list_the_alternatives() {
        fn square(s: &f64) -> Result<Box<dyn Shape>> {
            Ok(Box::new(Square(*s)))
        }
        let reg: Registry<dyn Shape, f64> = Registry::new("shape").register("square", square);
        assert_eq!(reg.create("square", &3.0).unwrap().area(), 9.0);
        let err = reg.create("circle", &1.0).err().unwrap();
        assert!(err.to_string().contains("known: square"));
    }
}
