#pragma once

#include <optional>
#include <string_view>

namespace avantsatie {

enum class PhaseKind { StartScreen, Instructions, Guessing, Replay, FullReplay, Done };

std::string_view phase_kind_name(PhaseKind kind);
std::optional<PhaseKind> parse_phase_kind(std::string_view name);

} // namespace avantsatie
