use serde::Serialize;

use super::dispatch::{DispatchMap, UNMAPPED_ACTION};
use super::RecognitionResult;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SubMode {
    #[default]
    None,
    Numeric,
    Alphabetic,
}

/// Interpreter mode. `sub_mode` is always `None` while inactive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct InterpreterState {
    pub active: bool,
    pub sub_mode: SubMode,
}

impl InterpreterState {
    pub fn is_consistent(&self) -> bool {
        self.active || self.sub_mode == SubMode::None
    }
}

/// Words with built-in mode semantics, matched ignoring ASCII case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlWord {
    Activate,
    Deactivate,
    EnterNumeric,
    ExitNumeric,
    EnterAlphabetic,
    ExitAlphabetic,
}

impl ControlWord {
    pub fn parse(word: &str) -> Option<Self> {
        const TABLE: [(&str, ControlWord); 6] = [
            ("activate", ControlWord::Activate),
            ("deactivate", ControlWord::Deactivate),
            ("enterthenumericstate", ControlWord::EnterNumeric),
            ("exitthenumericstate", ControlWord::ExitNumeric),
            ("enteralphabeticstate", ControlWord::EnterAlphabetic),
            ("exitthealphabeticstate", ControlWord::ExitAlphabetic),
        ];
        TABLE.iter().find(|(w, _)| w.eq_ignore_ascii_case(word)).map(|&(_, c)| c)
    }

    fn default_action(self) -> &'static str {
        match self {
            ControlWord::Activate => "mode:activate",
            ControlWord::Deactivate => "mode:deactivate",
            ControlWord::EnterNumeric => "mode:numeric-enter",
            ControlWord::ExitNumeric => "mode:numeric-exit",
            ControlWord::EnterAlphabetic => "mode:alphabetic-enter",
            ControlWord::ExitAlphabetic => "mode:alphabetic-exit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionEvent {
    pub word: String,
    pub action: String,
    pub mode_before: InterpreterState,
    pub mode_after: InterpreterState,
    pub score: f64,
    /// Position of the triggering utterance within its session.
    #[serde(skip)]
    pub timestamp: u64,
}

impl ActionEvent {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("events serialize")
    }
}

/// One step of the command state machine.
///
/// Rejected results change nothing. While inactive only `Activate` is
/// heard. `Deactivate` also clears the sub-mode. Entering a sub-mode that is
/// already active emits an event without changing state; exiting a sub-mode
/// that is not active is ignored. Any other word emits its mapped action, or
/// `unmapped`.
pub fn interpret(
    state: InterpreterState,
    result: &RecognitionResult,
    dispatch: &DispatchMap,
) -> (InterpreterState, Option<ActionEvent>) {
    let Some(word) = result.word() else {
        return (state, None);
    };
    let control = ControlWord::parse(word);
    if !state.active && control != Some(ControlWord::Activate) {
        return (state, None);
    }

    let next = match control {
        Some(ControlWord::Activate) => InterpreterState { active: true, ..state },
        Some(ControlWord::Deactivate) => InterpreterState::default(),
        Some(ControlWord::EnterNumeric) => InterpreterState { sub_mode: SubMode::Numeric, ..state },
        Some(ControlWord::EnterAlphabetic) => InterpreterState { sub_mode: SubMode::Alphabetic, ..state },
        Some(ControlWord::ExitNumeric) if state.sub_mode == SubMode::Numeric => {
            InterpreterState { sub_mode: SubMode::None, ..state }
        }
        Some(ControlWord::ExitAlphabetic) if state.sub_mode == SubMode::Alphabetic => {
            InterpreterState { sub_mode: SubMode::None, ..state }
        }
        Some(ControlWord::ExitNumeric | ControlWord::ExitAlphabetic) => return (state, None),
        None => state,
    };

    let action = match (dispatch.get(word), control) {
        (Some(a), _) => a.to_string(),
        (None, Some(c)) => c.default_action().to_string(),
        (None, None) => UNMAPPED_ACTION.to_string(),
    };
    let event = ActionEvent {
        word: word.to_string(),
        action,
        mode_before: state,
        mode_after: next,
        score: result.best_score.unwrap_or(f64::NEG_INFINITY),
        timestamp: 0,
    };
    (next, Some(event))
}

/// Threads interpreter state across a series of utterances.
#[derive(Debug, Clone)]
pub struct Session {
    state: InterpreterState,
    dispatch: DispatchMap,
    fed: u64,
}

impl Session {
    pub fn new(dispatch: DispatchMap) -> Self {
        Self { state: InterpreterState::default(), dispatch, fed: 0 }
    }

    pub fn state(&self) -> InterpreterState {
        self.state
    }

    pub fn feed(&mut self, result: &RecognitionResult) -> Option<ActionEvent> {
        let (next, event) = interpret(self.state, result, &self.dispatch);
        self.state = next;
        let stamp = self.fed;
        self.fed += 1;
        event.map(|e| ActionEvent { timestamp: stamp, ..e })
    }
}
