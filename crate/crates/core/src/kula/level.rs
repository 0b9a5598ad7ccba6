//! Level layouts and the plain-text level format.
//!
//! ```text
//! id: 1
//! time: 100
//! start: 2,3,N
//! start!: 0,0,E
//! ..#C#
//! ..#G#
//! ```
//!
//! `.` void, `#` platform, `C` coin, `K` key, `F` fruit, `G` goal, `S` spike.
//! Object characters stand on platform. Row 0 is north; x grows east.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::KulaError;

pub const MAX_SIDE: usize = 64;
pub const DEFAULT_TIME_S: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tile {
    Void,
    Platform,
    Goal,
    Spike,
}

impl Tile {
    pub fn is_solid(self) -> bool {
        self != Tile::Void
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ObjectKind {
    Coin,
    Key,
    Fruit,
}

impl ObjectKind {
    pub fn score_value(self) -> u32 {
        match self {
            ObjectKind::Coin => 250,
            ObjectKind::Key => 1000,
            ObjectKind::Fruit => 2500,
        }
    }

    pub fn glyph(self) -> char {
        match self {
            ObjectKind::Coin => 'C',
            ObjectKind::Key => 'K',
            ObjectKind::Fruit => 'F',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Orientation {
    N = 0,
    E = 1,
    S = 2,
    W = 3,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [Orientation::N, Orientation::E, Orientation::S, Orientation::W];

    pub fn from_u8(v: u8) -> Option<Orientation> {
        Self::ALL.get(v as usize).copied()
    }

    /// Clockwise quarter turn.
    pub fn right(self) -> Orientation {
        Self::ALL[(self as usize + 1) % 4]
    }

    pub fn left(self) -> Orientation {
        Self::ALL[(self as usize + 3) % 4]
    }

    /// Unit step (dx, dy); north is -y.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Orientation::N => (0, -1),
            Orientation::E => (1, 0),
            Orientation::S => (0, 1),
            Orientation::W => (-1, 0),
        }
    }

    pub fn arrow(self) -> char {
        match self {
            Orientation::N => '^',
            Orientation::E => '>',
            Orientation::S => 'v',
            Orientation::W => '<',
        }
    }
}

impl FromStr for Orientation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "N" | "n" => Ok(Orientation::N),
            "E" | "e" => Ok(Orientation::E),
            "S" | "s" => Ok(Orientation::S),
            "W" | "w" => Ok(Orientation::W),
            other => Err(format!("bad orientation '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pose {
    pub x: u8,
    pub y: u8,
    pub orientation: Orientation,
}

impl Pose {
    pub fn new(x: u8, y: u8, orientation: Orientation) -> Self {
        Pose { x, y, orientation }
    }
}

impl fmt::Display for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{:?}", self.x, self.y, self.orientation)
    }
}

/// Which start pose to load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StartSelector {
    Training(usize),
    Reserved,
}

impl fmt::Display for StartSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StartSelector::Training(i) => write!(f, "{i}"),
            StartSelector::Reserved => f.write_str("r"),
        }
    }
}

impl FromStr for StartSelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "r" | "reserved" => Ok(StartSelector::Reserved),
            n => n
                .parse()
                .map(StartSelector::Training)
                .map_err(|_| format!("bad start selector '{n}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub id: u8,
    pub time_limit_s: u32,
    pub width: usize,
    pub height: usize,
    /// Row-major, `width * height`.
    pub tiles: Vec<Tile>,
    #[serde(with = "cell_map")]
    pub objects: BTreeMap<(u8, u8), ObjectKind>,
    pub starts: Vec<Pose>,
    pub reserved_start: Option<Pose>,
}

impl LevelSpec {
    pub fn parse(text: &str) -> Result<LevelSpec, KulaError> {
        let bad = |line: usize, msg: String| KulaError::BadLevel { line, msg };
        let mut id = None;
        let mut time = DEFAULT_TIME_S;
        let mut starts = Vec::new();
        let mut reserved = None;
        let mut rows: Vec<(usize, &str)> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some((key, value)) = line.split_once(':') {
                if !rows.is_empty() {
                    return Err(bad(line_no, "header after grid rows".into()));
                }
                let value = value.trim();
                match key.trim() {
                    "id" => {
                        id = Some(value.parse().map_err(|_| bad(line_no, format!("bad id '{value}'")))?)
                    }
                    "time" => {
                        time = value
                            .parse()
                            .map_err(|_| bad(line_no, format!("bad time '{value}'")))?
                    }
                    "start" => starts.push(parse_pose(value).map_err(|m| bad(line_no, m))?),
                    "start!" => {
                        if reserved.is_some() {
                            return Err(bad(line_no, "more than one reserved start".into()));
                        }
                        reserved = Some(parse_pose(value).map_err(|m| bad(line_no, m))?);
                    }
                    other => return Err(bad(line_no, format!("unknown header '{other}'"))),
                }
            } else {
                rows.push((line_no, line));
            }
        }

        let id = id.ok_or_else(|| bad(0, "missing id".into()))?;
        if time == 0 {
            return Err(bad(0, "time must be positive".into()));
        }
        let height = rows.len();
        let width = rows.first().map(|(_, r)| r.chars().count()).unwrap_or(0);
        if height == 0 || width == 0 {
            return Err(bad(0, "empty grid".into()));
        }
        if width > MAX_SIDE || height > MAX_SIDE {
            return Err(bad(0, format!("grid {width}x{height} exceeds {MAX_SIDE}x{MAX_SIDE}")));
        }

        let mut tiles = Vec::with_capacity(width * height);
        let mut objects = BTreeMap::new();
        for (y, (line_no, row)) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(bad(*line_no, "ragged grid row".into()));
            }
            for (x, c) in row.chars().enumerate() {
                let (tile, obj) = match c {
                    '.' => (Tile::Void, None),
                    '#' => (Tile::Platform, None),
                    'G' => (Tile::Goal, None),
                    'S' => (Tile::Spike, None),
                    'C' => (Tile::Platform, Some(ObjectKind::Coin)),
                    'K' => (Tile::Platform, Some(ObjectKind::Key)),
                    'F' => (Tile::Platform, Some(ObjectKind::Fruit)),
                    other => return Err(bad(*line_no, format!("unknown grid character '{other}'"))),
                };
                tiles.push(tile);
                if let Some(o) = obj {
                    objects.insert((x as u8, y as u8), o);
                }
            }
        }

        let spec = LevelSpec {
            id,
            time_limit_s: time,
            width,
            height,
            tiles,
            objects,
            starts,
            reserved_start: reserved,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), KulaError> {
        let bad = |msg: String| KulaError::BadLevel { line: 0, msg };
        if self.starts.is_empty() {
            return Err(bad("no start pose".into()));
        }
        for p in self.starts.iter().chain(self.reserved_start.iter()) {
            if self.tile(p.x as i32, p.y as i32) != Tile::Platform {
                return Err(bad(format!("start {p} is not on a plain platform tile")));
            }
        }
        if self.key_count() > 0 && !self.tiles.contains(&Tile::Goal) {
            return Err(bad("keys without a goal".into()));
        }
        Ok(())
    }

    pub fn in_bounds(&self, x: i32, y: i32) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    /// Tile at (x, y); everything outside the grid is void.
    pub fn tile(&self, x: i32, y: i32) -> Tile {
        if self.in_bounds(x, y) {
            self.tiles[y as usize * self.width + x as usize]
        } else {
            Tile::Void
        }
    }

    pub fn key_count(&self) -> usize {
        self.objects.values().filter(|o| **o == ObjectKind::Key).count()
    }

    pub fn start(&self, sel: StartSelector) -> Result<Pose, KulaError> {
        match sel {
            StartSelector::Training(i) => self
                .starts
                .get(i)
                .copied()
                .ok_or_else(|| KulaError::UnknownStart(sel.to_string())),
            StartSelector::Reserved => self
                .reserved_start
                .ok_or_else(|| KulaError::UnknownStart(sel.to_string())),
        }
    }

    /// Grid characters, one string per row, with the given objects present.
    pub fn grid_rows(&self, objects: &BTreeMap<(u8, u8), ObjectKind>) -> Vec<String> {
        (0..self.height)
            .map(|y| {
                (0..self.width)
                    .map(|x| {
                        if let Some(o) = objects.get(&(x as u8, y as u8)) {
                            return o.glyph();
                        }
                        match self.tiles[y * self.width + x] {
                            Tile::Void => '.',
                            Tile::Platform => '#',
                            Tile::Goal => 'G',
                            Tile::Spike => 'S',
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Serializes back to the text format.
    pub fn to_text(&self) -> String {
        let mut out = format!("id: {}\ntime: {}\n", self.id, self.time_limit_s);
        let dir = |o: Orientation| format!("{o:?}");
        for p in &self.starts {
            out += &format!("start: {},{},{}\n", p.x, p.y, dir(p.orientation));
        }
        if let Some(p) = self.reserved_start {
            out += &format!("start!: {},{},{}\n", p.x, p.y, dir(p.orientation));
        }
        for row in self.grid_rows(&self.objects) {
            out += &row;
            out.push('\n');
        }
        out
    }
}

/// Serde adapter storing a cell-keyed map as a list of pairs (JSON keys must be strings).
pub(crate) mod cell_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::ObjectKind;

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<(u8, u8), ObjectKind>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let pairs: Vec<_> = map.iter().collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<(u8, u8), ObjectKind>, D::Error> {
        let pairs: Vec<((u8, u8), ObjectKind)> = Vec::deserialize(d)?;
        Ok(pairs.into_iter().collect())
    }
}

fn parse_pose(s: &str) -> Result<Pose, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [x, y, o] = parts.as_slice() else {
        return Err(format!("bad pose '{s}', expected x,y,DIR"));
    };
    Ok(Pose {
        x: x.parse().map_err(|_| format!("bad x '{x}'"))?,
        y: y.parse().map_err(|_| format!("bad y '{y}'"))?,
        orientation: o.parse()?,
    })
}

const LEVEL_TEXTS: [&str; 3] = [
    include_str!("../../levels/level1.txt"),
    include_str!("../../levels/level2.txt"),
    include_str!("../../levels/level3.txt"),
];

/// Ids of the bundled levels.
pub fn bundled_ids() -> impl Iterator<Item = u8> {
    1..=LEVEL_TEXTS.len() as u8
}

pub fn bundled(id: u8) -> Result<LevelSpec, KulaError> {
    let text = LEVEL_TEXTS
        .get((id as usize).wrapping_sub(1))
        .ok_or(KulaError::UnknownLevel(id))?;
    LevelSpec::parse(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "id: 9\ntime: 30\nstart: 0,1,N\nstart!: 1,1,E\n#C#\n##G\n";

    #[test]
    fn parses_headers_and_grid() {
        let l = LevelSpec::parse(SMALL).unwrap();
        assert_eq!((l.id, l.time_limit_s, l.width, l.height), (9, 30, 3, 2));
        assert_eq!(l.objects.get(&(1, 0)), Some(&ObjectKind::Coin));
        assert_eq!(l.tile(2, 1), Tile::Goal);
        assert_eq!(l.tile(-1, 0), Tile::Void);
        assert_eq!(l.start(StartSelector::Reserved).unwrap(), Pose::new(1, 1, Orientation::E));
        assert!(matches!(l.start(StartSelector::Training(3)), Err(KulaError::UnknownStart(_))));
    }

    #[test]
    fn text_round_trip() {
        let l = LevelSpec::parse(SMALL).unwrap();
        assert_eq!(LevelSpec::parse(&l.to_text()).unwrap(), l);
    }

    #[test]
    fn rejects_bad_levels() {
        for text in [
            "time: 3\nstart: 0,0,N\n#\n",
            "id: 1\nstart: 0,0,N\n#.\n#\n",
            "id: 1\nstart: 1,0,N\n#.\n",
            "id: 1\nstart: 0,0,N\n#K\n",
            "id: 1\nstart: 0,0,N\n#x\n",
            "id: 1\n#\n",
        ] {
            assert!(LevelSpec::parse(text).is_err(), "accepted {text:?}");
        }
    }

    #[test]
    fn reserved_missing_is_unknown_start() {
        let l = LevelSpec::parse("id: 1\nstart: 0,0,N\n#\n").unwrap();
        assert!(matches!(l.start(StartSelector::Reserved), Err(KulaError::UnknownStart(_))));
    }

    #[test]
    fn bundled_levels_parse() {
        for id in bundled_ids() {
            let l = bundled(id).unwrap();
            assert_eq!(l.id, id);
            assert_eq!(l.starts.len(), 4);
            assert_eq!(l.time_limit_s, DEFAULT_TIME_S);
        }
        assert!(bundled(2).unwrap().reserved_start.is_some());
        assert!(matches!(bundled(0), Err(KulaError::UnknownLevel(0))));
    }

    #[test]
    fn rotations_compose() {
        for o in Orientation::ALL {
            assert_eq!(o.left().right(), o);
            assert_eq!(o.right().right().right().right(), o);
        }
    }
}
