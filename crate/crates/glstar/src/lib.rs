//! Core of the GL* proof system: ΣCNF(2) recognition and witnessing,
//! sequent-calculus proof checking, witness extraction, propositional
//! translation of bounded arithmetic and branching programs.

pub mod arith;
pub mod bp;
pub mod calculus;
pub mod cli;
pub mod cnf2;
pub mod files;
pub mod formula;
pub mod lexer;
pub mod oracle;
pub mod translate;
pub mod witnessing;
