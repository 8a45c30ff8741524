#pragma once

namespace evade {

constexpr const char* kVersion = "1.0.0";

}  // namespace evade
