use std::fmt;
use std::str::FromStr;

/// GNSS constellation, in canonical (palette/sort) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constellation {
    Gps,
    Galileo,
    Glonass,
    Beidou,
    Qzss,
    Irnss,
    Sbas,
}

impl Constellation {
    pub const ALL: [Constellation; 7] = [
        Constellation::Gps,
        Constellation::Galileo,
        Constellation::Glonass,
        Constellation::Beidou,
        Constellation::Qzss,
        Constellation::Irnss,
        Constellation::Sbas,
    ];

    /// `gnss_id` spelling.
    pub fn as_str(self) -> &'static str {
        match self {
            Constellation::Gps => "gps",
            Constellation::Galileo => "galileo",
            Constellation::Glonass => "glonass",
            Constellation::Beidou => "beidou",
            Constellation::Qzss => "qzss",
            Constellation::Irnss => "irnss",
            Constellation::Sbas => "sbas",
        }
    }

    /// RINEX/SP3 system letter.
    pub fn from_rinex_char(c: char) -> Option<Self> {
        match c {
            'G' | ' ' => Some(Constellation::Gps),
            'E' => Some(Constellation::Galileo),
            'R' => Some(Constellation::Glonass),
            'C' => Some(Constellation::Beidou),
            'J' => Some(Constellation::Qzss),
            'I' => Some(Constellation::Irnss),
            'S' => Some(Constellation::Sbas),
            _ => None,
        }
    }

    pub fn rinex_char(self) -> char {
        match self {
            Constellation::Gps => 'G',
            Constellation::Galileo => 'E',
            Constellation::Glonass => 'R',
            Constellation::Beidou => 'C',
            Constellation::Qzss => 'J',
            Constellation::Irnss => 'I',
            Constellation::Sbas => 'S',
        }
    }

    /// Position in the canonical order.
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Constellation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Constellation::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| format!("unknown constellation '{s}'"))
    }
}
