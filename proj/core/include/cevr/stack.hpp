#pragma once

#include <string>
#include <vector>

#include "cevr/image.hpp"
#include "cevr/model.hpp"

namespace cevr {

enum class StackMode { Predefined, Continuous };

StackMode parse_stack_mode(const std::string& text);
const char* to_string(StackMode mode);

// Predefined: -3..+3 in whole stops. Continuous: -3..+3 in half stops.
std::vector<EvStep> preset_evs(StackMode mode);

// Every entry is predicted directly from `input`; the EV-0 entry is `input`
// itself. Either model may be null when no EV of its sign is requested.
LdrStack generate_stack(const ModelWeights* increase, const ModelWeights* decrease,
                        const LdrImage& input, const std::vector<EvStep>& evs);

}  // namespace cevr
