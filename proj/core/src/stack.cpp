#include "cevr/stack.hpp"

#include "cevr/error.hpp"

namespace cevr {

StackMode parse_stack_mode(const std::string& text) {
    if (text == "predefined") return StackMode::Predefined;
    if (text == "continuous") return StackMode::Continuous;
    fail(ErrorKind::ParseError, "unknown stack mode '" + text + "' (expected predefined|continuous)");
}

const char* to_string(StackMode mode) { return mode == StackMode::Predefined ? "predefined" : "continuous"; }

std::vector<EvStep> preset_evs(StackMode mode) {
    const int per_stop = mode == StackMode::Predefined ? 1 : 2;
    std::vector<EvStep> evs;
    for (int i = -3 * per_stop; i <= 3 * per_stop; ++i) evs.emplace_back(static_cast<double>(i) / per_stop);
    return evs;
}

LdrStack generate_stack(const ModelWeights* increase, const ModelWeights* decrease, const LdrImage& input,
                        const std::vector<EvStep>& evs) {
    require(!evs.empty(), ErrorKind::InvalidArgument, "generate_stack: no EVs requested");
    for (std::size_t i = 1; i < evs.size(); ++i) {
        require(evs[i - 1] < evs[i], ErrorKind::InvalidArgument, "generate_stack: EVs must be strictly increasing");
    }
    std::vector<StackEntry> entries;
    entries.reserve(evs.size());
    for (EvStep s : evs) {
        const ModelWeights* w = select_model(increase, decrease, s);
        entries.push_back({w ? forward(*w, input, s) : input, s});
    }
    return LdrStack(std::move(entries));
}

}  // namespace cevr
