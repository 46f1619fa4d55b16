#pragma once

#include <markov/config.hpp>

int run_decay_fit(const markov::ExperimentConfig& c);
int run_collapse(const markov::ExperimentConfig& c);
int run_exact_verify(const markov::ExperimentConfig& c);
int run_rbim_check(const markov::ExperimentConfig& c);
int run_reversal_demo(const markov::ExperimentConfig& c);
