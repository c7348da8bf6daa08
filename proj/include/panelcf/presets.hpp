#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "panelcf/errors.hpp"
#include "panelcf/panel.hpp"

namespace panelcf {

// Built-in donor-pool membership snapshots. Membership of these blocs changes
// over time, so users can override any preset with a JSON file of the form
// {"name": ["Unit", ...], ...}; unknown units are dropped at restriction time.
inline const std::map<std::string, std::vector<std::string>>& builtin_presets() {
  static const std::map<std::string, std::vector<std::string>> presets = {
      // Ibero-American pool without ALBA members (Bolivia, Cuba, Ecuador,
      // Nicaragua sit out because of institutional comparability concerns).
      {"ibero17",
       {"Argentina", "Brazil", "Chile", "Colombia", "Costa Rica",
        "Dominican Republic", "El Salvador", "Equatorial Guinea", "Guatemala",
        "Honduras", "Mexico", "Panama", "Paraguay", "Peru", "Portugal", "Spain",
        "Uruguay"}},
      // Mercosur full + associated states snapshot.
      {"mercosur",
       {"Argentina", "Bolivia", "Brazil", "Chile", "Colombia", "Ecuador",
        "Guyana", "Paraguay", "Peru", "Suriname", "Uruguay"}},
      // Organization of American States (active members snapshot).
      {"oas",
       {"Antigua and Barbuda", "Argentina", "Bahamas", "Barbados", "Belize",
        "Bolivia", "Brazil", "Canada", "Chile", "Colombia", "Costa Rica", "Cuba",
        "Dominica", "Dominican Republic", "Ecuador", "El Salvador", "Grenada",
        "Guatemala", "Guyana", "Haiti", "Honduras", "Jamaica", "Mexico",
        "Nicaragua", "Panama", "Paraguay", "Peru", "Saint Kitts and Nevis",
        "Saint Lucia", "Saint Vincent and the Grenadines", "Suriname",
        "Trinidad and Tobago", "United States", "Uruguay", "Venezuela"}},
      {"opec",
       {"Algeria", "Republic of the Congo", "Equatorial Guinea", "Gabon", "Iran",
        "Iraq", "Kuwait", "Libya", "Nigeria", "Saudi Arabia",
        "United Arab Emirates", "Venezuela"}},
      // Organization of Ibero-American States (full membership incl. ALBA).
      {"oias",
       {"Andorra", "Argentina", "Bolivia", "Brazil", "Chile", "Colombia",
        "Costa Rica", "Cuba", "Dominican Republic", "Ecuador", "El Salvador",
        "Equatorial Guinea", "Guatemala", "Honduras", "Mexico", "Nicaragua",
        "Panama", "Paraguay", "Peru", "Portugal", "Spain", "Uruguay",
        "Venezuela"}},
  };
  return presets;
}

inline std::map<std::string, std::vector<std::string>>
load_presets_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("panel", "load_presets", "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error("panel", "load_presets", std::string("bad JSON: ") + e.what());
  }
  std::map<std::string, std::vector<std::string>> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_array())
      throw Error("panel", "load_presets", "preset '" + it.key() + "' is not a list");
    std::vector<std::string> members;
    for (const auto& m : it.value()) members.push_back(m.get<std::string>());
    out[it.key()] = std::move(members);
  }
  return out;
}

// Resolves a named preset against the loaded panel: members not present in
// the data are dropped silently (snapshots routinely list units outside any
// given sample); the treated unit is removed if the bloc contains it.
inline TreatmentSpec
restrict_donors(const PanelDataset& p, const std::string& preset_name,
                const std::string& treated, int treatment_year,
                const std::map<std::string, std::vector<std::string>>& extra_presets = {}) {
  const std::string op = "restrict_donors";
  check_treatment_window(p, treated, treatment_year, op);
  const std::vector<std::string>* members = nullptr;
  if (auto it = extra_presets.find(preset_name); it != extra_presets.end())
    members = &it->second;
  else if (auto jt = builtin_presets().find(preset_name); jt != builtin_presets().end())
    members = &jt->second;
  else
    throw Error("panel", op, "unknown donor preset '" + preset_name + "'");

  std::set<std::string> pool;
  for (const auto& m : *members)
    if (m != treated && p.has_unit(m)) pool.insert(m);
  if (pool.empty())
    throw EmptyDonorPool(op, "preset '" + preset_name +
                                 "' has no members in the loaded panel");
  TreatmentSpec t;
  t.treated_unit = treated;
  t.treatment_year = treatment_year;
  t.donor_pool.assign(pool.begin(), pool.end());
  return t;
}

} // namespace panelcf
