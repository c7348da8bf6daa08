#pragma once

#include <string>

#include <Eigen/Core>
#include <boost/version.hpp>

namespace panelcf {

inline constexpr const char* kVersion = "0.1.0";

// Dependency versions recorded in run manifests. Deterministic for a given
// build; no timestamps here.
inline std::string version_block() {
  return std::string("panelcf=") + kVersion +
         " eigen=" + std::to_string(EIGEN_WORLD_VERSION) + "." +
         std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION) +
         " boost=" + std::to_string(BOOST_VERSION / 100000) + "." +
         std::to_string(BOOST_VERSION / 100 % 1000) + "." +
         std::to_string(BOOST_VERSION % 100);
}

} // namespace panelcf
