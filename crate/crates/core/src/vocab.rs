//! Closed attribute vocabulary, synonyms, and direction names.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

macro_rules! closed_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $word:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $word),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self, Error> {
                match s {
                    $($word => Ok($name::$variant),)+
                    other => Err(Error::UnknownValue {
                        kind: stringify!($name),
                        value: other.to_string(),
                    }),
                }
            }
        }
    };
}

closed_enum!(Color {
    Gray => "gray",
    Red => "red",
    Blue => "blue",
    Green => "green",
    Brown => "brown",
    Purple => "purple",
    Cyan => "cyan",
    Yellow => "yellow",
});

closed_enum!(Size {
    Large => "large",
    Small => "small",
});

closed_enum!(Material {
    Metal => "metal",
    Rubber => "rubber",
});

closed_enum!(Shape {
    Cube => "cube",
    Sphere => "sphere",
    Cylinder => "cylinder",
});

closed_enum!(
    /// The four attribute kinds an object carries.
    AttributeKind {
        Size => "size",
        Color => "color",
        Material => "material",
        Shape => "shape",
    }
);

closed_enum!(
    /// Scene-relative directions. `left = -right`, `front = -behind`.
    Direction {
        Left => "left",
        Right => "right",
        Front => "front",
        Behind => "behind",
    }
);

closed_enum!(
    /// Visibility flag accepted by the `visible` module.
    Visibility {
        Fully => "fully",
        Partially => "partially",
    }
);

impl Direction {
    pub fn opposite(self) -> Direction {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
            Direction::Front => Direction::Behind,
            Direction::Behind => Direction::Front,
        }
    }
}

/// A concrete attribute value of any kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeValue {
    Size(Size),
    Color(Color),
    Material(Material),
    Shape(Shape),
}

impl AttributeValue {
    pub fn kind(self) -> AttributeKind {
        match self {
            AttributeValue::Size(_) => AttributeKind::Size,
            AttributeValue::Color(_) => AttributeKind::Color,
            AttributeValue::Material(_) => AttributeKind::Material,
            AttributeValue::Shape(_) => AttributeKind::Shape,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AttributeValue::Size(v) => v.as_str(),
            AttributeValue::Color(v) => v.as_str(),
            AttributeValue::Material(v) => v.as_str(),
            AttributeValue::Shape(v) => v.as_str(),
        }
    }

    /// Parses a canonical value of the given kind.
    pub fn parse(kind: AttributeKind, word: &str) -> Result<Self, Error> {
        Ok(match kind {
            AttributeKind::Size => AttributeValue::Size(word.parse()?),
            AttributeKind::Color => AttributeValue::Color(word.parse()?),
            AttributeKind::Material => AttributeValue::Material(word.parse()?),
            AttributeKind::Shape => AttributeValue::Shape(word.parse()?),
        })
    }

    /// Every value of every kind, in kind order.
    pub fn all() -> impl Iterator<Item = AttributeValue> {
        Size::ALL
            .iter()
            .map(|&v| AttributeValue::Size(v))
            .chain(Color::ALL.iter().map(|&v| AttributeValue::Color(v)))
            .chain(Material::ALL.iter().map(|&v| AttributeValue::Material(v)))
            .chain(Shape::ALL.iter().map(|&v| AttributeValue::Shape(v)))
    }

    pub fn values_of(kind: AttributeKind) -> Vec<AttributeValue> {
        Self::all().filter(|v| v.kind() == kind).collect()
    }
}

impl fmt::Display for AttributeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Surface words for each canonical value. The canonical word is always listed first.
pub fn synonyms(value: AttributeValue) -> &'static [&'static str] {
    match value {
        AttributeValue::Size(Size::Large) => &["large", "big"],
        AttributeValue::Size(Size::Small) => &["small", "tiny"],
        AttributeValue::Material(Material::Metal) => &["metal", "metallic", "shiny"],
        AttributeValue::Material(Material::Rubber) => &["rubber", "matte"],
        AttributeValue::Shape(Shape::Cube) => &["cube", "block"],
        AttributeValue::Shape(Shape::Sphere) => &["sphere", "ball"],
        AttributeValue::Shape(Shape::Cylinder) => &["cylinder"],
        AttributeValue::Color(c) => match c {
            Color::Gray => &["gray"],
            Color::Red => &["red"],
            Color::Blue => &["blue"],
            Color::Green => &["green"],
            Color::Brown => &["brown"],
            Color::Purple => &["purple"],
            Color::Cyan => &["cyan"],
            Color::Yellow => &["yellow"],
        },
    }
}

/// Nouns used when no shape is named.
pub const GENERIC_NOUNS: &[&str] = &["thing", "object"];

/// Maps any surface word (canonical or synonym) back to its canonical value.
pub fn canonicalize(word: &str) -> Option<AttributeValue> {
    AttributeValue::all().find(|&v| synonyms(v).contains(&word))
}

const ORDINAL_WORDS: &[&str] = &[
    "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth", "eleventh",
    "twelfth",
];

/// English ordinal for a 1-based rank.
pub fn ordinal_word(rank: usize) -> String {
    match rank {
        1..=12 => ORDINAL_WORDS[rank - 1].to_string(),
        _ => {
            let suffix = match (rank % 10, rank % 100) {
                (1, r) if r != 11 => "st",
                (2, r) if r != 12 => "nd",
                (3, r) if r != 13 => "rd",
                _ => "th",
            };
            format!("{rank}{suffix}")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_sets_are_closed() {
        assert_eq!(Color::ALL.len(), 8);
        assert_eq!(Size::ALL.len(), 2);
        assert_eq!(Material::ALL.len(), 2);
        assert_eq!(Shape::ALL.len(), 3);
        assert_eq!(AttributeValue::all().count(), 15);
    }

    #[test]
    fn every_synonym_has_one_owner() {
        let mut seen = std::collections::HashMap::new();
        for v in AttributeValue::all() {
            assert_eq!(synonyms(v)[0], v.as_str());
            for w in synonyms(v) {
                assert!(seen.insert(*w, v).is_none(), "{w} listed twice");
                assert_eq!(canonicalize(w), Some(v));
            }
        }
        assert_eq!(canonicalize("block"), Some(AttributeValue::Shape(Shape::Cube)));
        assert_eq!(canonicalize("shiny"), Some(AttributeValue::Material(Material::Metal)));
        assert_eq!(canonicalize("widget"), None);
    }

    #[test]
    fn parse_round_trip() {
        for v in AttributeValue::all() {
            assert_eq!(AttributeValue::parse(v.kind(), v.as_str()).unwrap(), v);
        }
        assert!(AttributeValue::parse(AttributeKind::Color, "cube").is_err());
        assert_eq!("behind".parse::<Direction>().unwrap(), Direction::Behind);
    }

    #[test]
    fn ordinals() {
        assert_eq!(ordinal_word(2), "second");
        assert_eq!(ordinal_word(9), "ninth");
        assert_eq!(ordinal_word(21), "21st");
        assert_eq!(ordinal_word(13), "13th");
    }
}
