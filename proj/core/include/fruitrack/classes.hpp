#pragma once

namespace fruitrack::classes {

// Detector label ids.
inline constexpr int kStem = 0;
inline constexpr int kUnripe = 1;
inline constexpr int kRipe = 2;
inline constexpr int kLeafBranch = 3;
inline constexpr int kFlower = 4;

}  // namespace fruitrack::classes
