#pragma once

// Small shared builders for the test suite.

#include <map>
#include <string>
#include <vector>

#include "panelcf/panel.hpp"

namespace testutil {

// Balanced one-outcome panel ("q") from per-unit rows of yearly values.
inline panelcf::PanelDataset make_panel(const std::vector<std::string>& units,
                                        int first_year,
                                        const std::vector<std::vector<double>>& rows,
                                        const std::string& varname = "q") {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(units.size()),
                    static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  std::map<std::string, Eigen::MatrixXd> vars;
  vars[varname] = m;
  return panelcf::PanelDataset::from_matrices(units, first_year, vars);
}

// Same but with several variables sharing the unit/year grid.
inline panelcf::PanelDataset make_panel_vars(
    const std::vector<std::string>& units, int first_year,
    const std::map<std::string, std::vector<std::vector<double>>>& vars) {
  std::map<std::string, Eigen::MatrixXd> mats;
  for (const auto& [name, rows] : vars) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(units.size()),
                      static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < rows[i].size(); ++j)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    mats[name] = m;
  }
  return panelcf::PanelDataset::from_matrices(units, first_year, mats);
}

} // namespace testutil
