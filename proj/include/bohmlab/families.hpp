#ifndef BOHMLAB_FAMILIES_HPP
#define BOHMLAB_FAMILIES_HPP

#include "bohmlab/polar.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bohmlab {

class FamilyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ParamSpec {
    std::string name;
    std::string default_value;  // printable default (number or expression)
    std::string doc;
};

struct FamilyDescriptor {
    std::string id;
    std::string section;  // catalog grouping, e.g. "IV.A"
    std::vector<ParamSpec> parameters;
    bool vanishing_bohm = false;
    std::string summary;
};

/// Family selection plus parameter overrides. Parameters may be numbers or,
/// where noted (zeta), expression strings in t.
struct FamilyConfig {
    std::string family;
    nlohmann::json params = nlohmann::json::object();

    static FamilyConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Stable catalog of the 13 builtin solution families.
const std::vector<FamilyDescriptor>& list_families();

/// Construct the exact solution bundle for a family configuration.
/// `grid` overrides the family default (tabulated special functions adapt
/// their range to it).
SolutionBundle build(const FamilyConfig& cfg, const PhysicalConstants& consts = {},
                     const std::optional<Grid>& grid = {});

/// Closed-form packet acceleration -(V' + V_B')/m as an Expr in t, for the
/// accelerating families; throws FamilyError otherwise.
Expr declared_acceleration(const FamilyConfig& cfg, const PhysicalConstants& consts = {});

} // namespace bohmlab

#endif
