use serde::{Deserialize, Serialize};

/// Closed category set: 16 static furniture pieces and 13 portable objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    // Static furniture and appliances.
    CounterTop,
    Table,
    Desk,
    Fridge,
    Microwave,
    Stove,
    Sink,
    Cabinet,
    Drawer,
    Shelf,
    Bed,
    Sofa,
    Toilet,
    Bathtub,
    GarbageCan,
    Lamp,
    // Portable objects.
    Apple,
    Bread,
    Tomato,
    Potato,
    Mug,
    Cup,
    Plate,
    Pan,
    Pot,
    Knife,
    Book,
    SoapBar,
    Towel,
}

pub const CATEGORIES: [Category; 29] = [
    Category::CounterTop,
    Category::Table,
    Category::Desk,
    Category::Fridge,
    Category::Microwave,
    Category::Stove,
    Category::Sink,
    Category::Cabinet,
    Category::Drawer,
    Category::Shelf,
    Category::Bed,
    Category::Sofa,
    Category::Toilet,
    Category::Bathtub,
    Category::GarbageCan,
    Category::Lamp,
    Category::Apple,
    Category::Bread,
    Category::Tomato,
    Category::Potato,
    Category::Mug,
    Category::Cup,
    Category::Plate,
    Category::Pan,
    Category::Pot,
    Category::Knife,
    Category::Book,
    Category::SoapBar,
    Category::Towel,
];

pub const CATEGORY_COUNT: usize = CATEGORIES.len();

/// Vertical placement: which camera pitch brings the object into view.
/// Low needs pitch -1 (LookDown), Mid pitch 0, High pitch +1 (LookUp).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjHeight {
    Low,
    Mid,
    High,
}

impl ObjHeight {
    pub fn pitch(self) -> i8 {
        match self {
            ObjHeight::Low => -1,
            ObjHeight::Mid => 0,
            ObjHeight::High => 1,
        }
    }
}

impl Category {
    pub fn index(self) -> usize {
        CATEGORIES.iter().position(|c| *c == self).expect("listed")
    }

    /// Lowercase instruction token; also the vocabulary entry.
    pub fn token(self) -> &'static str {
        match self {
            Category::CounterTop => "counter",
            Category::Table => "table",
            Category::Desk => "desk",
            Category::Fridge => "fridge",
            Category::Microwave => "microwave",
            Category::Stove => "stove",
            Category::Sink => "sink",
            Category::Cabinet => "cabinet",
            Category::Drawer => "drawer",
            Category::Shelf => "shelf",
            Category::Bed => "bed",
            Category::Sofa => "sofa",
            Category::Toilet => "toilet",
            Category::Bathtub => "bathtub",
            Category::GarbageCan => "bin",
            Category::Lamp => "lamp",
            Category::Apple => "apple",
            Category::Bread => "bread",
            Category::Tomato => "tomato",
            Category::Potato => "potato",
            Category::Mug => "mug",
            Category::Cup => "cup",
            Category::Plate => "plate",
            Category::Pan => "pan",
            Category::Pot => "pot",
            Category::Knife => "knife",
            Category::Book => "book",
            Category::SoapBar => "soap",
            Category::Towel => "towel",
        }
    }

    pub fn pickupable(self) -> bool {
        matches!(
            self,
            Category::Apple
                | Category::Bread
                | Category::Tomato
                | Category::Potato
                | Category::Mug
                | Category::Cup
                | Category::Plate
                | Category::Pan
                | Category::Pot
                | Category::Knife
                | Category::Book
                | Category::SoapBar
                | Category::Towel
        )
    }

    /// Static pieces that can hold portable objects. Lamp is the one static
    /// non-receptacle.
    pub fn receptacle(self) -> bool {
        !self.pickupable() && self != Category::Lamp
    }

    pub fn openable(self) -> bool {
        matches!(
            self,
            Category::Fridge | Category::Microwave | Category::Cabinet | Category::Drawer
        )
    }

    pub fn toggleable(self) -> bool {
        matches!(
            self,
            Category::Sink | Category::Stove | Category::Microwave | Category::Lamp
        )
    }

    pub fn sliceable(self) -> bool {
        matches!(
            self,
            Category::Apple | Category::Bread | Category::Tomato | Category::Potato
        )
    }

    /// Turning this station on heats everything in or held at it.
    pub fn heats(self) -> bool {
        matches!(self, Category::Stove | Category::Microwave)
    }

    /// Closing this station chills its contents.
    pub fn cools(self) -> bool {
        self == Category::Fridge
    }

    /// Turning this station on washes everything in or held at it.
    pub fn cleans(self) -> bool {
        self == Category::Sink
    }

    pub fn height(self) -> ObjHeight {
        match self {
            Category::Drawer
            | Category::Bed
            | Category::Sofa
            | Category::Toilet
            | Category::Bathtub
            | Category::GarbageCan
            | Category::Sink => ObjHeight::Low,
            Category::CounterTop
            | Category::Table
            | Category::Desk
            | Category::Fridge
            | Category::Stove
            | Category::Lamp => ObjHeight::Mid,
            Category::Microwave | Category::Cabinet | Category::Shelf => ObjHeight::High,
            // Portables inherit the height of whatever they sit on; this is
            // their fallback when unplaced.
            _ => ObjHeight::Mid,
        }
    }
}

/// Mutable state flags of one object instance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub clean: bool,
    pub heated: bool,
    pub cooled: bool,
    pub sliced: bool,
    pub toggled_on: bool,
    pub held: bool,
    pub open: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectState {
    pub id: usize,
    pub category: Category,
    pub position: (usize, usize),
    pub flags: Flags,
    /// Receptacle currently holding this object, if any.
    pub container: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_nine_distinct_categories() {
        assert_eq!(CATEGORY_COUNT, 29);
        for (i, c) in CATEGORIES.iter().enumerate() {
            assert_eq!(c.index(), i);
        }
    }

    #[test]
    fn pickupable_and_receptacle_are_disjoint() {
        for c in CATEGORIES {
            assert!(!(c.pickupable() && c.receptacle()), "{c:?}");
        }
    }

    #[test]
    fn stations_are_static() {
        for c in CATEGORIES {
            if c.heats() || c.cools() || c.cleans() {
                assert!(c.receptacle(), "{c:?} must be a fixed station");
            }
        }
    }

    #[test]
    fn tokens_are_unique_and_lowercase() {
        let mut tokens: Vec<&str> = CATEGORIES.iter().map(|c| c.token()).collect();
        tokens.sort_unstable();
        let before = tokens.len();
        tokens.dedup();
        assert_eq!(tokens.len(), before);
        for t in tokens {
            assert!(t.chars().all(|ch| ch.is_ascii_lowercase()));
        }
    }
}
