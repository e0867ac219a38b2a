#pragma once
// Catalog of example systems wired as (model, driver) pairs.

#include "stochham/integrators.hpp"
#include "stochham/montecarlo.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace stochham {

using Params = std::map<std::string, double>;

struct ParamSchema {
  std::string name;
  double default_value = 0.0;
  double min = -std::numeric_limits<double>::infinity();
  double max = std::numeric_limits<double>::infinity();
  bool min_exclusive = false;
  bool integer = false;
  std::string description;
};

struct CatalogEntry {
  std::string name;
  std::string anchor;
  std::string summary;
  std::vector<ParamSchema> params;
  bool hamiltonian = true;
  bool closed_form = false;
};

const std::vector<CatalogEntry>& catalog();
const CatalogEntry& catalog_entry(const std::string& name);  // UnknownName
nlohmann::json catalog_json();

/// Defaults merged with overrides; throws InvalidArgument on unknown keys or out-of-range values.
Params resolve_params(const CatalogEntry& entry, const Params& overrides);

using ClosedForm = std::function<Trajectory(const NoisePath& X, const Vec& z0)>;

struct SystemSpec {
  std::string name;
  std::string anchor;
  Params params;
  Model model = ItoModel{};
  DriverSpec driver;
  DriverTransform derive_driver;  // empty unless the driver is built from the sampled path
  std::vector<std::string> coordinates;
  std::vector<Vec> equilibria;
  Vec default_initial;
  InitialSampler sampler;  // empty for deterministic initial states
  std::map<std::string, ScalarField> observables;
  ClosedForm closed_form;
  bool hamiltonian = true;  // runs through the Hamiltonian steppers
  bool symplectic = true;   // nondegenerate constant structure with a Liouville primitive

  std::size_t dim() const;
  const HamiltonianSystem& hamiltonian_system() const;  // NotAvailable for Ito-only entries
  EnsembleModel ensemble_model() const;
  /// Driver actually seen by the model for a given base path.
  NoisePath driver_path(double T, double dt, Seed seed) const;
};

SystemSpec build_system(const std::string& name, const Params& overrides = {});

/// Exact trajectory on X's grid; NotAvailable when the entry has none.
Trajectory closed_form_reference(const SystemSpec& sys, const NoisePath& X, const Vec& z0);

struct MomentSeries {
  std::vector<double> times;
  std::vector<double> q;
  std::vector<double> p;
  /// max over interior grid points of |m q'' + lambda q' + k q| with fourth-order differences of q.
  double second_order_residual = 0.0;
};

struct OscillatorConstants {
  double lambda = 0.0;  // nu^2 rho
  double k = 0.0;       // rho (nu^4 rho / 4m + 1)
};

OscillatorConstants oscillator_constants(const Params& params);

/// RK4 solution of q' = p/m - a q, p' = -a p - rho q with a = nu^2 rho / 2m.
MomentSeries oscillator_moment_ode(const Params& params, double q0, double p0, double T, double dt_ode);

}  // namespace stochham
