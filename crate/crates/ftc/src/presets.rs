//! Scenarios shipped with the binary.

/// The default vehicle, used when a scenario names no vehicle file.
pub const DEFAULT_VEHICLE: &str = include_str!("../presets/vehicle.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preset {
    pub name: &'static str,
    pub text: &'static str,
}

impl Preset {
    /// The `description` line of the preset file.
    pub fn description(&self) -> String {
        #[derive(serde::Deserialize)]
        struct Head {
            #[serde(default)]
            description: String,
        }
        toml::from_str::<Head>(self.text)
            .map(|h| h.description)
            .unwrap_or_default()
    }
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig3_baseline",
        text: include_str!("../presets/fig3_baseline.toml"),
    },
    Preset {
        name: "fig5_residual",
        text: include_str!("../presets/fig5_residual.toml"),
    },
    Preset {
        name: "fig6_sequential_faults",
        text: include_str!("../presets/fig6_sequential_faults.toml"),
    },
    Preset {
        name: "fig7_failure",
        text: include_str!("../presets/fig7_failure.toml"),
    },
    Preset {
        name: "fig10_ts_stress",
        text: include_str!("../presets/fig10_ts_stress.toml"),
    },
    Preset {
        name: "single_thruster_1",
        text: include_str!("../presets/single_thruster_1.toml"),
    },
    Preset {
        name: "single_thruster_2",
        text: include_str!("../presets/single_thruster_2.toml"),
    },
    Preset {
        name: "single_thruster_3",
        text: include_str!("../presets/single_thruster_3.toml"),
    },
    Preset {
        name: "single_thruster_4",
        text: include_str!("../presets/single_thruster_4.toml"),
    },
    Preset {
        name: "table1_case1",
        text: include_str!("../presets/table1_case1.toml"),
    },
    Preset {
        name: "table1_case2",
        text: include_str!("../presets/table1_case2.toml"),
    },
    Preset {
        name: "table1_case3",
        text: include_str!("../presets/table1_case3.toml"),
    },
    Preset {
        name: "table1_case4",
        text: include_str!("../presets/table1_case4.toml"),
    },
    Preset {
        name: "table1_case5",
        text: include_str!("../presets/table1_case5.toml"),
    },
    Preset {
        name: "table1_case6",
        text: include_str!("../presets/table1_case6.toml"),
    },
    Preset {
        name: "table1_case7",
        text: include_str!("../presets/table1_case7.toml"),
    },
    Preset {
        name: "table1_case8",
        text: include_str!("../presets/table1_case8.toml"),
    },
];

/// Other names accepted for a preset.
const ALIASES: &[(&str, &str)] = &[("fig6_sequential", "fig6_sequential_faults")];

pub fn find(name: &str) -> Option<&'static Preset> {
    let name = ALIASES
        .iter()
        .find(|(alias, _)| *alias == name)
        .map_or(name, |(_, target)| target);
    PRESETS.iter().find(|p| p.name == name)
}
