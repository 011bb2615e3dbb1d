#pragma once

#include <map>
#include <string>
#include <vector>

#include "isaacs/model.hpp"

namespace isaacs {

/// A game spec together with its default control discretisation.
struct GameInstance {
    std::string family;
    std::map<std::string, double> params;
    GameSpec spec;
    ControlGrid controls;
};

struct ParamDoc {
    std::string name;
    double default_value;
    std::string doc;
};

struct GameFamilyInfo {
    std::string name;
    std::string summary;
    std::vector<ParamDoc> params;
};

/// Built-in coefficient families, alphabetised by name.
std::vector<GameFamilyInfo> list_games();

/// Instantiates a built-in family. Unknown parameter names are rejected so that
/// typos in experiment manifests do not silently fall back to defaults.
GameInstance make_game(const std::string& family, const std::map<std::string, double>& params = {});

}  // namespace isaacs
