use core::fmt;

/// Material code stored in every voxel and attached to every element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LabelCode(pub u8);

impl LabelCode {
    pub const BACKGROUND: LabelCode = LabelCode(0);
    /// Pooled fibrous and mixed tissue. In raw segmentations the same code
    /// means fibrous tissue.
    pub const WALL: LabelCode = LabelCode(1);
    pub const LIPID: LabelCode = LabelCode(2);
    pub const CALCIUM: LabelCode = LabelCode(3);
    pub const LUMEN: LabelCode = LabelCode(4);
    pub const INNER_REFINE: LabelCode = LabelCode(5);
    pub const OUTER_REFINE: LabelCode = LabelCode(6);
    /// Mixed tissue; only valid in raw segmentations before pooling.
    pub const MIXED: LabelCode = LabelCode(7);
    pub const FIBROUS: LabelCode = LabelCode::WALL;

    /// Every code the palette knows about, in code order.
    pub const PALETTE: [LabelCode; 8] = [
        Self::BACKGROUND,
        Self::WALL,
        Self::LIPID,
        Self::CALCIUM,
        Self::LUMEN,
        Self::INNER_REFINE,
        Self::OUTER_REFINE,
        Self::MIXED,
    ];

    pub fn new(code: u8) -> crate::Result<Self> {
        let label = LabelCode(code);
        if label.is_known() {
            Ok(label)
        } else {
            Err(crate::Error::UnknownLabel(code))
        }
    }

    pub fn is_known(self) -> bool {
        self.0 <= 7
    }

    pub fn name(self) -> &'static str {
        match self.0 {
            0 => "background",
            1 => "wall",
            2 => "lipid",
            3 => "calcium",
            4 => "lumen",
            5 => "inner_refine",
            6 => "outer_refine",
            7 => "mixed",
            _ => "unknown",
        }
    }

    /// Tissue that ends up in the exported model.
    pub fn is_tissue(self) -> bool {
        matches!(self.0, 1 | 2 | 3 | 5 | 6)
    }

    /// Wall-like codes: plain wall and the two refinement shells, which share
    /// the wall material.
    pub fn is_wall_like(self) -> bool {
        matches!(self.0, 1 | 5 | 6)
    }

    /// Tie-break rank when two labels are equally close: higher wins.
    /// Calcium > lipid > lumen > wall; everything else below wall.
    pub fn priority(self) -> u8 {
        match self.0 {
            3 => 4,
            2 => 3,
            4 => 2,
            1 => 1,
            _ => 0,
        }
    }
}

impl fmt::Display for LabelCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.0, self.name())
    }
}

impl From<LabelCode> for u8 {
    fn from(l: LabelCode) -> u8 {
        l.0
    }
}
