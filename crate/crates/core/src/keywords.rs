//! Built-in vocabularies: chart topics, organisation and workflow topics, street names.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Economics,
    Technology,
    Society,
}

/// Magnitude class of a topic's values; fixes the sampling range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitClass {
    Percent,
    Currency,
    Count,
}

impl UnitClass {
    /// Inclusive integer range values are drawn from.
    pub fn range(self) -> (i64, i64) {
        match self {
            UnitClass::Percent => (1, 60),
            UnitClass::Currency => (10, 10_000),
            UnitClass::Count => (1, 500),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub domain: Domain,
    pub name: String,
    pub unit_class: UnitClass,
    /// Unit label printed on axes, e.g. "%", "million USD", "TWh".
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordLibrary {
    pub topics: Vec<Topic>,
}

impl KeywordLibrary {
    pub fn builtin() -> KeywordLibrary {
        let mut topics = Vec::with_capacity(150);
        for (domain, list) in [(Domain::Economics, ECONOMICS), (Domain::Technology, TECHNOLOGY), (Domain::Society, SOCIETY)] {
            topics.extend(list.iter().map(|&(name, unit_class, unit)| Topic {
                domain,
                name: name.to_string(),
                unit_class,
                unit: unit.to_string(),
            }));
        }
        KeywordLibrary { topics }
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    /// Library invariants: non-empty and every topic at most eight words.
    pub fn check(&self) -> Result<(), String> {
        if self.topics.is_empty() {
            return Err("keyword library is empty".into());
        }
        for t in &self.topics {
            let words = t.name.split_whitespace().count();
            if words == 0 || words > 8 {
                return Err(format!("topic `{}` has {words} words", t.name));
            }
        }
        Ok(())
    }

    /// Adds topics, skipping names already present.
    pub fn extend(&mut self, more: impl IntoIterator<Item = Topic>) {
        for t in more {
            if !self.topics.iter().any(|x| x.name.eq_ignore_ascii_case(&t.name)) {
                self.topics.push(t);
            }
        }
    }
}

impl Default for KeywordLibrary {
    fn default() -> Self {
        KeywordLibrary::builtin()
    }
}

use UnitClass::{Count, Currency, Percent};

const ECONOMICS: &[(&str, UnitClass, &str)] = &[
    ("GDP", Currency, "billion USD"),
    ("Energy consumption", Count, "TWh"),
    ("Employment rate", Percent, "%"),
    ("Inflation rate", Percent, "%"),
    ("Household savings", Currency, "million USD"),
    ("Export volume", Currency, "million USD"),
    ("Import volume", Currency, "million USD"),
    ("Foreign direct investment", Currency, "million USD"),
    ("Retail sales revenue", Currency, "million USD"),
    ("Manufacturing output", Currency, "million USD"),
    ("Unemployment rate", Percent, "%"),
    ("Interest rate trends", Percent, "%"),
    ("Tourism revenue", Currency, "million USD"),
    ("Agricultural production", Count, "kilotons"),
    ("Crude oil production", Count, "million barrels"),
    ("Housing starts", Count, "thousand units"),
    ("Consumer price index change", Percent, "%"),
    ("Small business loans", Currency, "million USD"),
    ("Market share of smartphone brands", Percent, "%"),
    ("Quarterly corporate profits", Currency, "million USD"),
    ("Government budget allocation", Currency, "million USD"),
    ("Public debt by sector", Currency, "billion USD"),
    ("Venture capital funding", Currency, "million USD"),
    ("Shipping container throughput", Count, "thousand TEU"),
    ("Stock market returns", Percent, "%"),
    ("Wage growth by industry", Percent, "%"),
    ("Online retail penetration", Percent, "%"),
    ("Coffee bean exports", Count, "kilotons"),
    ("Steel production", Count, "megatons"),
    ("Natural gas prices", Currency, "USD per unit"),
    ("Restaurant industry revenue", Currency, "million USD"),
    ("Electric vehicle sales", Count, "thousand units"),
    ("Airline passenger revenue", Currency, "million USD"),
    ("Insurance premiums collected", Currency, "million USD"),
    ("Real estate transaction volume", Currency, "million USD"),
    ("Trade balance by region", Currency, "million USD"),
    ("Corporate tax revenue", Currency, "million USD"),
    ("Startup survival rate", Percent, "%"),
    ("Household electricity bills", Currency, "USD"),
    ("Wholesale food prices", Currency, "USD per ton"),
    ("Mining output", Count, "megatons"),
    ("Gold reserves", Count, "tons"),
    ("Bank lending growth", Percent, "%"),
    ("Labor force participation", Percent, "%"),
    ("Minimum wage levels", Currency, "USD per month"),
    ("Advertising expenditure", Currency, "million USD"),
    ("Textile exports", Currency, "million USD"),
    ("Fisheries catch volume", Count, "kilotons"),
    ("Freight rail tonnage", Count, "megatons"),
    ("Pension fund assets", Currency, "billion USD"),
];

const TECHNOLOGY: &[(&str, UnitClass, &str)] = &[
    ("Cloud computing market share", Percent, "%"),
    ("Semiconductor shipments", Count, "million units"),
    ("Internet penetration rate", Percent, "%"),
    ("Mobile app downloads", Count, "million"),
    ("Data center energy use", Count, "GWh"),
    ("Cybersecurity incidents reported", Count, "incidents"),
    ("Software developer population", Count, "thousand"),
    ("Research and development spending", Currency, "million USD"),
    ("Patent applications filed", Count, "applications"),
    ("Broadband subscription growth", Percent, "%"),
    ("Solar panel installations", Count, "MW"),
    ("Wind power capacity", Count, "MW"),
    ("Battery storage deployments", Count, "MWh"),
    ("Smartphone shipments by brand", Count, "million units"),
    ("Operating system usage share", Percent, "%"),
    ("Web browser market share", Percent, "%"),
    ("Artificial intelligence investment", Currency, "million USD"),
    ("Robotics installations in factories", Count, "units"),
    ("Satellite launches", Count, "launches"),
    ("5G network coverage", Percent, "%"),
    ("Streaming service subscribers", Count, "million"),
    ("Video game revenue", Currency, "million USD"),
    ("E-commerce conversion rate", Percent, "%"),
    ("Open source project contributions", Count, "commits"),
    ("Server uptime by provider", Percent, "%"),
    ("IT budget allocation", Currency, "thousand USD"),
    ("Electronic waste recycling", Count, "kilotons"),
    ("Drone deliveries completed", Count, "deliveries"),
    ("Quantum computing research grants", Currency, "million USD"),
    ("Social media daily active users", Count, "million"),
    ("Programming language popularity", Percent, "%"),
    ("Chip fabrication capacity", Count, "thousand wafers"),
    ("Smart home device adoption", Percent, "%"),
    ("Electric grid outages", Count, "outages"),
    ("Tech startup funding rounds", Count, "rounds"),
    ("Average download speed", Count, "Mbps"),
    ("Wearable device sales", Count, "thousand units"),
    ("Autonomous vehicle test miles", Count, "thousand miles"),
    ("Online learning platform enrollments", Count, "thousand"),
    ("Digital payment transactions", Count, "million"),
    ("Hydrogen fuel cell production", Count, "units"),
    ("Laptop shipments", Count, "million units"),
    ("Bug reports per release", Count, "reports"),
    ("Email spam share", Percent, "%"),
    ("Printer ink cartridge sales", Count, "thousand units"),
    ("Cloud storage pricing", Currency, "USD per TB"),
    ("Telecom infrastructure spending", Currency, "million USD"),
    ("Biotech clinical trials started", Count, "trials"),
    ("Fiber optic cable deployment", Count, "km"),
    ("Virtual reality headset sales", Count, "thousand units"),
];

const SOCIETY: &[(&str, UnitClass, &str)] = &[
    ("Population growth rate", Percent, "%"),
    ("Literacy rate", Percent, "%"),
    ("Public library visits", Count, "thousand visits"),
    ("Hospital bed occupancy", Percent, "%"),
    ("University enrollment", Count, "thousand students"),
    ("Urban green space per capita", Count, "square meters"),
    ("Public transit ridership", Count, "million rides"),
    ("Household recycling rate", Percent, "%"),
    ("Volunteer participation", Percent, "%"),
    ("Charitable donations", Currency, "million USD"),
    ("Museum attendance", Count, "thousand visitors"),
    ("Crime rate by district", Count, "cases"),
    ("Average commute time", Count, "minutes"),
    ("Vaccination coverage", Percent, "%"),
    ("Childcare costs", Currency, "USD per month"),
    ("Housing affordability index", Count, "points"),
    ("Voter turnout", Percent, "%"),
    ("Sports club memberships", Count, "members"),
    ("Water consumption per household", Count, "liters per day"),
    ("Air quality index", Count, "AQI"),
    ("Life expectancy gains", Count, "months"),
    ("Obesity prevalence", Percent, "%"),
    ("Marriage rate", Count, "per thousand"),
    ("Migration flows", Count, "thousand people"),
    ("Homeless shelter capacity", Count, "beds"),
    ("Food bank distributions", Count, "tons"),
    ("Teacher to student ratio", Count, "students"),
    ("Elderly care facility residents", Count, "residents"),
    ("Public park visits", Count, "thousand visits"),
    ("Cinema ticket sales", Count, "thousand tickets"),
    ("Book publishing output", Count, "titles"),
    ("Youth sports participation", Percent, "%"),
    ("Road traffic accidents", Count, "accidents"),
    ("Emergency call volume", Count, "calls"),
    ("Renewable energy adoption in homes", Percent, "%"),
    ("Household internet spending", Currency, "USD per month"),
    ("Tourist arrivals", Count, "thousand"),
    ("Festival attendance", Count, "thousand"),
    ("Community garden plots", Count, "plots"),
    ("Daily screen time", Count, "minutes"),
    ("Cycling lane length", Count, "km"),
    ("Healthcare spending per capita", Currency, "USD"),
    ("Student loan balances", Currency, "million USD"),
    ("Pet ownership rate", Percent, "%"),
    ("Remote work adoption", Percent, "%"),
    ("Local election candidates", Count, "candidates"),
    ("Public wifi hotspots", Count, "hotspots"),
    ("Noise complaints filed", Count, "complaints"),
    ("Blood donation volume", Count, "units"),
    ("Night school enrollments", Count, "students"),
];

/// Root names for organisation charts.
pub const ORGANISATIONS: &[&str] = &[
    "Digital Forensics Unit",
    "Graphic Design Team",
    "Renewable Energy Agency",
    "City Planning Office",
    "Customer Success Division",
    "Clinical Research Center",
    "Regional Sales Office",
    "Wildlife Conservation Trust",
    "Software Platform Group",
    "Public Health Department",
    "Logistics Hub",
    "Film Production Studio",
    "Aerospace Lab",
    "University Library",
    "Marine Biology Institute",
    "Emergency Response Team",
];

/// Department and sub-unit names for organisation-chart nodes.
pub const DEPARTMENTS: &[&str] = &[
    "Case Management",
    "Training and Development",
    "Evidence Collection",
    "Analysis",
    "Workshops",
    "Certifications",
    "Operations",
    "Research",
    "Finance",
    "Marketing",
    "Support",
    "Logistics",
    "Quality Assurance",
    "Planning",
    "Compliance",
    "Recruitment",
    "Procurement",
    "Design",
    "Engineering",
    "Sales",
    "Legal",
    "Audit",
    "Security",
    "Data Science",
    "Outreach",
    "Field Work",
    "Archives",
    "Maintenance",
    "Public Relations",
    "Partnerships",
    "Inventory",
    "Scheduling",
];

/// Street names used as landmark labels; no entry is a whole-word part of another.
pub const STREET_NAMES: &[&str] = &[
    "Oak", "Pine", "Elm", "Maple", "Cedar", "Birch", "Willow", "Aspen", "Spruce", "Poplar", "Alder", "Hazel", "Juniper", "Laurel",
    "Magnolia", "Chestnut", "Walnut", "Hickory", "Sycamore", "Cypress", "Linden", "Rowan", "Holly", "Ivy", "Fern", "Clover", "Daisy",
    "Lily", "Rose", "Tulip", "Violet", "Iris", "Orchid", "Lotus", "Sage", "Thyme", "Basil", "Mint", "Cherry", "Apple", "Plum", "Peach",
    "Lemon", "Olive", "Acorn", "Meadow", "River", "Lake", "Harbor", "Bay", "Summit", "Valley", "Canyon", "Ridge", "Prairie", "Forest",
    "Garden", "Bridge", "Mill", "Market", "Church", "Castle", "Station", "Union",
];

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn builtin_library_is_valid() {
        let lib = KeywordLibrary::builtin();
        assert_eq!(lib.len(), 150);
        lib.check().unwrap();
        let names: HashSet<_> = lib.topics.iter().map(|t| t.name.to_lowercase()).collect();
        assert_eq!(names.len(), 150);
        for seed in ["GDP", "Energy consumption", "Employment rate"] {
            assert!(lib.topics.iter().any(|t| t.name == seed));
        }
    }

    #[test]
    fn street_names_are_distinct_single_words() {
        assert_eq!(STREET_NAMES.len(), 64);
        let set: HashSet<_> = STREET_NAMES.iter().map(|s| s.to_lowercase()).collect();
        assert_eq!(set.len(), 64);
        assert!(STREET_NAMES.iter().all(|s| !s.contains(' ')));
    }

    #[test]
    fn long_topics_fail_check() {
        let mut lib = KeywordLibrary { topics: vec![] };
        assert!(lib.check().is_err());
        lib.topics.push(Topic {
            domain: Domain::Society,
            name: "one two three four five six seven eight nine".into(),
            unit_class: UnitClass::Count,
            unit: "x".into(),
        });
        assert!(lib.check().is_err());
    }
}
