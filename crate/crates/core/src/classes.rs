//! The fixed 13-category label table of indoor scenes.

/// Number of semantic categories.
pub const NUM_CLASSES: usize = 13;

/// Category names in canonical order; the position is the label id.
pub const CLASS_NAMES: [&str; NUM_CLASSES] = [
    "ceiling", "floor", "wall", "beam", "column", "window", "door", "table", "chair", "sofa",
    "bookcase", "board", "clutter",
];

pub const CLUTTER: u8 = 12;

/// Display palette used when exporting labeled clouds.
pub const PALETTE: [[u8; 3]; NUM_CLASSES] = [
    [0, 255, 0],     // ceiling
    [0, 0, 255],     // floor
    [0, 255, 255],   // wall
    [255, 255, 0],   // beam
    [255, 0, 255],   // column
    [100, 100, 255], // window
    [200, 200, 100], // door
    [170, 120, 200], // table
    [255, 0, 0],     // chair
    [200, 100, 100], // sofa
    [10, 200, 100],  // bookcase
    [200, 200, 200], // board
    [50, 50, 50],    // clutter
];

pub fn class_name(id: u8) -> Option<&'static str> {
    CLASS_NAMES.get(id as usize).copied()
}

pub fn class_id(name: &str) -> Option<u8> {
    CLASS_NAMES
        .iter()
        .position(|n| n.eq_ignore_ascii_case(name))
        .map(|i| i as u8)
}

/// Maps an annotation object name such as `chair_3` to its label id by
/// its prefix. Names outside the table (e.g. `stairs`) fall back to clutter.
pub fn label_for_object(object_name: &str) -> u8 {
    let prefix = object_name.split('_').next().unwrap_or(object_name);
    class_id(prefix).unwrap_or(CLUTTER)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_follow_table_order() {
        assert_eq!(class_id("ceiling"), Some(0));
        assert_eq!(class_id("wall"), Some(2));
        assert_eq!(class_id("clutter"), Some(12));
        assert_eq!(class_name(9), Some("sofa"));
        assert_eq!(class_name(13), None);
    }

    #[test]
    fn object_prefix_lookup() {
        assert_eq!(label_for_object("chair_12"), 8);
        assert_eq!(label_for_object("bookcase_1"), 10);
        assert_eq!(label_for_object("stairs_1"), CLUTTER);
    }

    #[test]
    fn palette_is_distinct() {
        for i in 0..NUM_CLASSES {
            for j in i + 1..NUM_CLASSES {
                assert_ne!(PALETTE[i], PALETTE[j]);
            }
        }
    }
}
