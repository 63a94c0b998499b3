//! Name-keyed registry of interchangeable strategies.
//!
//! Criteria evaluators, Tikhonov penalties, and Schatten series kinds are each a
//! family of trait objects. A front end picks members by name at runtime.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Implemented by every trait object that can be registered.
pub trait Named {
    fn name(&self) -> &'static str;
}

pub struct Registry<T: ?Sized + Named> {
    family: &'static str,
    entries: BTreeMap<&'static str, Box<T>>,
}

impl<T: ?Sized + Named> Registry<T> {
    pub fn new(family: &'static str) -> Self {
        Self {
            family,
            entries: BTreeMap::new(),
        }
    }

    /// Registers a strategy, replacing any previous entry with the same name.
    pub fn register(&mut self, entry: Box<T>) -> &mut Self {
        self.entries.insert(entry.name(), entry);
        self
    }

    pub fn get(&self, name: &str) -> Result<&T> {
        self.entries
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                family: self.family,
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.entries.values().map(|b| b.as_ref())
    }

    pub fn family(&self) -> &'static str {
        self.family
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter: Named {
        fn greet(&self) -> String;
    }

    struct Hello;
    impl Named for Hello {
        fn name(&self) -> &'static str {
            "hello"
        }
    }
    impl Greeter for Hello {
        fn greet(&self) -> String {
            "hi".into()
        }
    }

    #[test]
    fn lookup_by_name() {
        let mut reg: Registry<dyn Greeter> = Registry::new("greeter");
        reg.register(Box::new(Hello));
        assert_eq!(reg.get("hello").unwrap().greet(), "hi");
        assert_eq!(reg.names(), vec!["hello"]);
        let err = reg.get("bye").err().unwrap();
        assert!(err.to_string().contains("available: hello"));
    }
}
