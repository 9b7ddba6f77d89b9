use crate::syntax::format_number;
use crate::transforms::{ArgField, ArgSelector, MoveSelector, ReverseMode, TaskParams};

use super::Language;

/// Natural-language task statement for `params` applied to routine `proc`.
pub fn instruction(params: &TaskParams, proc: &str, lang: Language) -> String {
    match (params, lang) {
        (TaskParams::T1 { selector, field, new_value }, Language::En) => {
            let field = match field {
                ArgField::Speed => "speed",
                ArgField::Zone => "zone",
                ArgField::Tool => "tool",
            };
            let which = match selector {
                ArgSelector::All => "all movement instructions".to_string(),
                ArgSelector::Range(lo, hi) => format!("movement instructions {lo} to {hi}"),
                ArgSelector::Target(t) => format!("the movement instructions to {t}"),
            };
            format!("Change the {field} of {which} in routine {proc} to {new_value}.")
        }
        (TaskParams::T1 { selector, field, new_value }, Language::De) => {
            let field = match field {
                ArgField::Speed => "die Geschwindigkeit",
                ArgField::Zone => "die Zone",
                ArgField::Tool => "das Werkzeug",
            };
            let which = match selector {
                ArgSelector::All => "aller Bewegungsanweisungen".to_string(),
                ArgSelector::Range(lo, hi) => format!("der Bewegungsanweisungen {lo} bis {hi}"),
                ArgSelector::Target(t) => format!("der Bewegungsanweisungen zu {t}"),
            };
            format!("Ändere {field} {which} in der Routine {proc} auf {new_value}.")
        }
        (TaskParams::T2 { selector, dx, dy, dz }, lang) => {
            let d = format!("({}, {}, {})", format_number(*dx), format_number(*dy), format_number(*dz));
            match (selector, lang) {
                (MoveSelector::Index(i), Language::En) => format!(
                    "Add an offset of {d} mm with Offs to the target of movement instruction {i} in routine {proc}."
                ),
                (MoveSelector::Target(t), Language::En) => format!(
                    "Add an offset of {d} mm with Offs to the movement to {t} in routine {proc}."
                ),
                (MoveSelector::Index(i), Language::De) => format!(
                    "Füge dem Ziel der Bewegungsanweisung {i} in der Routine {proc} mit Offs einen Versatz von {d} mm hinzu."
                ),
                (MoveSelector::Target(t), Language::De) => format!(
                    "Füge der Bewegung zu {t} in der Routine {proc} mit Offs einen Versatz von {d} mm hinzu."
                ),
            }
        }
        (TaskParams::T3 { mode: ReverseMode::Instruction }, Language::En) => {
            format!("Reverse the movement routine {proc} by reversing the order of its movement instructions.")
        }
        (TaskParams::T3 { mode: ReverseMode::Instruction }, Language::De) => {
            format!("Kehre die Bewegungsroutine {proc} um, indem du die Reihenfolge der Bewegungsanweisungen umkehrst.")
        }
        (TaskParams::T3 { mode: ReverseMode::Segment }, Language::En) => format!(
            "Reverse the movement routine {proc} so the robot drives the same path backwards from its final position; each segment keeps its speed and each point keeps its zone."
        ),
        (TaskParams::T3 { mode: ReverseMode::Segment }, Language::De) => format!(
            "Kehre die Bewegungsroutine {proc} um, sodass der Roboter denselben Weg von der Endposition aus rückwärts fährt; jedes Segment behält seine Geschwindigkeit und jeder Punkt seine Zone."
        ),
    }
}
