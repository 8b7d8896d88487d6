#include "georabi/georabi.h"

#include <cstring>
#include <string>

#include "georabi/errors.hpp"
#include "georabi/experiment.hpp"

using georabi::Error;
using georabi::ErrorCode;
namespace exp_ns = georabi::experiment;

struct grb_experiment {
  exp_ns::ExperimentConfig config;
};

struct grb_results {
  exp_ns::ExperimentConfig config;  // snapshot used for provenance headers
  std::string command;
  exp_ns::RunResult result;
};

namespace {

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_error(char** error, const std::string& message) {
  if (error) *error = dup_string(message);
}

int status_of(const Error& e) {
  switch (e.code()) {
    case ErrorCode::config:
      return GRB_ERR_CONFIG;
    case ErrorCode::validity:
      return GRB_ERR_VALIDITY;
    case ErrorCode::usage:
      return GRB_ERR_USAGE;
    default:
      return GRB_ERR_NUMERIC;
  }
}

template <class Fn>
int guarded(char** error, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    set_error(error, e.what());
    return status_of(e);
  } catch (const std::exception& e) {
    set_error(error, e.what());
    return GRB_ERR_NUMERIC;
  }
}

}  // namespace

extern "C" {

const char* grb_version(void) { return georabi::kVersion; }

int grb_experiment_from_json(const char* json_text, grb_experiment** out, char** error) {
  if (!json_text || !out) {
    set_error(error, "null argument");
    return GRB_ERR_USAGE;
  }
  *out = nullptr;
  return guarded(error, [&] {
    auto* e = new grb_experiment{exp_ns::ExperimentConfig::parse(json_text)};
    *out = e;
    return GRB_OK;
  });
}

int grb_experiment_from_preset(const char* name, grb_experiment** out, char** error) {
  if (!name || !out) {
    set_error(error, "null argument");
    return GRB_ERR_USAGE;
  }
  *out = nullptr;
  return guarded(error, [&] {
    auto* e = new grb_experiment{exp_ns::ExperimentConfig::preset(name)};
    *out = e;
    return GRB_OK;
  });
}

int grb_experiment_override(grb_experiment* exp, const char* dotted_path, const char* json_value,
                            char** error) {
  if (!exp || !dotted_path || !json_value) {
    set_error(error, "null argument");
    return GRB_ERR_USAGE;
  }
  return guarded(error, [&] {
    exp->config.override_value(dotted_path, json_value);
    return GRB_OK;
  });
}

int grb_experiment_canonical_json(const grb_experiment* exp, char** out_json, char** error) {
  if (!exp || !out_json) {
    set_error(error, "null argument");
    return GRB_ERR_USAGE;
  }
  return guarded(error, [&] {
    *out_json = dup_string(exp->config.canonical_json());
    return GRB_OK;
  });
}

void grb_experiment_free(grb_experiment* exp) { delete exp; }

int grb_experiment_run(const grb_experiment* exp, const char* command, grb_results** out,
                       char** error) {
  if (!exp || !command || !out) {
    set_error(error, "null argument");
    return GRB_ERR_USAGE;
  }
  *out = nullptr;
  return guarded(error, [&] {
    auto* r = new grb_results{exp->config, command, exp_ns::run(exp->config, command)};
    *out = r;
    return GRB_OK;
  });
}

int grb_results_table_count(const grb_results* res) {
  return res ? static_cast<int>(res->result.tables.size()) : 0;
}

const char* grb_results_table_name(const grb_results* res, int index) {
  if (!res || index < 0 || index >= static_cast<int>(res->result.tables.size())) return nullptr;
  return res->result.tables[index].name.c_str();
}

int grb_results_table_csv(const grb_results* res, const char* name, int stamped, char** out_csv,
                          char** error) {
  if (!res || !name || !out_csv) {
    set_error(error, "null argument");
    return GRB_ERR_USAGE;
  }
  return guarded(error, [&] {
    const auto* table = res->result.table(name);
    if (!table) {
      set_error(error, std::string("no table named '") + name + "'");
      return GRB_ERR_USAGE;
    }
    *out_csv =
        dup_string(exp_ns::table_csv(res->config, res->command, res->result, *table, stamped != 0));
    return GRB_OK;
  });
}

int grb_results_scalar_count(const grb_results* res) {
  return res ? static_cast<int>(res->result.scalars.size()) : 0;
}

const char* grb_results_scalar_name(const grb_results* res, int index) {
  if (!res || index < 0 || index >= static_cast<int>(res->result.scalars.size())) return nullptr;
  return res->result.scalars[index].first.c_str();
}

int grb_results_scalar(const grb_results* res, const char* name, double* out_value) {
  if (!res || !name || !out_value) return GRB_ERR_USAGE;
  const auto v = res->result.scalar(name);
  if (!v) return GRB_ERR_USAGE;
  *out_value = *v;
  return GRB_OK;
}

int grb_results_note_count(const grb_results* res) {
  return res ? static_cast<int>(res->result.notes.size()) : 0;
}

const char* grb_results_note(const grb_results* res, int index) {
  if (!res || index < 0 || index >= static_cast<int>(res->result.notes.size())) return nullptr;
  return res->result.notes[index].c_str();
}

int grb_results_validity(const grb_results* res) {
  return res ? static_cast<int>(res->result.validity) : 0;
}

void grb_results_free(grb_results* res) { delete res; }

void grb_string_free(char* s) { std::free(s); }

}  // extern "C"
