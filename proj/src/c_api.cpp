#include "hemoreduce/hemoreduce.h"

#include <cstring>
#include <iostream>
#include <optional>
#include <string>

#include "hemoreduce/error.hpp"
#include "hemoreduce/io.hpp"
#include "hemoreduce/pipeline.hpp"

struct hr_pipeline {
  hemoreduce::PipelineConfig config;
  std::string out;
  bool verbose = false;
  std::string error;
  std::string config_json;
  std::optional<hemoreduce::EvaluateStageResult> evaluation;
};

struct hr_snapshots {
  hemoreduce::SnapshotMatrix data;
};

namespace {

static_assert(static_cast<int>(hemoreduce::ErrorCode::MissingArtifact) + 1 == HR_ERR_MISSING_ARTIFACT);
static_assert(static_cast<int>(hemoreduce::ErrorCode::ConfigError) + 1 == HR_ERR_CONFIG);

hr_status to_status(hemoreduce::ErrorCode code) {
  return static_cast<hr_status>(static_cast<int>(code) + 1);
}

void copy_message(const std::string& msg, char* buf, size_t len) {
  if (!buf || len == 0) return;
  const size_t n = std::min(len - 1, msg.size());
  std::memcpy(buf, msg.data(), n);
  buf[n] = '\0';
}

template <typename F>
hr_status guard(std::string* error, F&& body) {
  try {
    body();
    if (error) error->clear();
    return HR_OK;
  } catch (const hemoreduce::Error& e) {
    if (error) *error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    if (error) *error = e.what();
    return HR_ERR_UNKNOWN;
  } catch (...) {
    if (error) *error = "unknown error";
    return HR_ERR_UNKNOWN;
  }
}

template <typename F>
hr_status stage(hr_pipeline* p, const char* name, F&& body) {
  if (!p) return HR_ERR_NULL_HANDLE;
  return guard(&p->error, [&] {
    std::ostream* log = p->verbose ? &std::cerr : nullptr;
    auto result = body(log);
    hemoreduce::write_manifest(p->config, p->out, name, result);
    if constexpr (std::is_same_v<decltype(result), hemoreduce::EvaluateStageResult>) p->evaluation = std::move(result);
  });
}

}  // namespace

extern "C" {

const char* hr_version(void) { return hemoreduce::version_string(); }

const char* hr_status_name(hr_status status) {
  if (status == HR_OK) return "Ok";
  if (status == HR_ERR_NULL_HANDLE) return "NullHandle";
  if (status > HR_OK && status < HR_ERR_NULL_HANDLE)
    return hemoreduce::to_string(static_cast<hemoreduce::ErrorCode>(static_cast<int>(status) - 1));
  return "Unknown";
}

int hr_exit_code(hr_status status) {
  switch (status) {
    case HR_OK: return 0;
    case HR_ERR_CONFIG: return 2;
    case HR_ERR_MISSING_ARTIFACT: return 3;
    default: return 1;
  }
}

hr_status hr_pipeline_create(const char* config_path, hr_pipeline** out, char* err_buf, size_t err_len) {
  if (!out) return HR_ERR_NULL_HANDLE;
  *out = nullptr;
  std::string error;
  hemoreduce::PipelineConfig config;
  const hr_status st = guard(&error, [&] {
    if (config_path) config = hemoreduce::load_config(config_path);
    else config.validate();
  });
  if (st != HR_OK) {
    copy_message(error, err_buf, err_len);
    return st;
  }
  auto* p = new (std::nothrow) hr_pipeline;
  if (!p) return HR_ERR_UNKNOWN;
  p->config = std::move(config);
  p->out = p->config.output.dir;
  *out = p;
  return HR_OK;
}

void hr_pipeline_destroy(hr_pipeline* p) { delete p; }

const char* hr_pipeline_last_error(const hr_pipeline* p) { return p ? p->error.c_str() : "null handle"; }

hr_status hr_pipeline_set_output(hr_pipeline* p, const char* dir) {
  if (!p) return HR_ERR_NULL_HANDLE;
  if (!dir || !*dir) {
    p->error = "output directory must not be empty";
    return HR_ERR_INVALID_ARGUMENT;
  }
  p->out = dir;
  p->config.output.dir = dir;
  return HR_OK;
}

hr_status hr_pipeline_set_train_seed(hr_pipeline* p, uint64_t seed) {
  if (!p) return HR_ERR_NULL_HANDLE;
  p->config.train.seed = seed;
  return HR_OK;
}

hr_status hr_pipeline_set_verbose(hr_pipeline* p, int enabled) {
  if (!p) return HR_ERR_NULL_HANDLE;
  p->verbose = enabled != 0;
  return HR_OK;
}

const char* hr_pipeline_config_json(hr_pipeline* p) {
  if (!p) return nullptr;
  p->config_json = hemoreduce::config_to_json(p->config);
  return p->config_json.c_str();
}

hr_status hr_generate(hr_pipeline* p) {
  return stage(p, "generate", [&](std::ostream* log) { return hemoreduce::run_generate(p->config, p->out, log); });
}

hr_status hr_pod(hr_pipeline* p) {
  return stage(p, "pod", [&](std::ostream* log) -> hemoreduce::StageResult {
    return hemoreduce::run_pod(p->config, p->out, log);
  });
}

hr_status hr_rom(hr_pipeline* p, const char* method) {
  if (!p) return HR_ERR_NULL_HANDLE;
  if (!method) {
    p->error = "method must not be null";
    return HR_ERR_INVALID_ARGUMENT;
  }
  const std::string m = method;
  return stage(p, ("rom_" + m).c_str(),
               [&](std::ostream* log) { return hemoreduce::run_rom(p->config, p->out, m, log); });
}

hr_status hr_evaluate(hr_pipeline* p) {
  return stage(p, "evaluate", [&](std::ostream* log) { return hemoreduce::run_evaluate(p->config, p->out, log); });
}

hr_status hr_error_summary(const hr_pipeline* p, const char* method, const char* quantity, double* max, double* mean,
                           double* drift_ratio) {
  if (!p) return HR_ERR_NULL_HANDLE;
  if (!method || !quantity) return HR_ERR_INVALID_ARGUMENT;
  if (!p->evaluation) return HR_ERR_MISSING_ARTIFACT;
  for (const auto& ev : p->evaluation->methods) {
    if (ev.method != method) continue;
    const hemoreduce::ErrorSummary* s = nullptr;
    if (std::strcmp(quantity, "e_U") == 0) s = &ev.e_U;
    else if (std::strcmp(quantity, "e_p") == 0) s = &ev.e_p;
    else if (std::strcmp(quantity, "e_wss") == 0) s = &ev.e_wss;
    if (!s) return HR_ERR_INVALID_ARGUMENT;
    if (max) *max = s->max;
    if (mean) *mean = s->mean;
    if (drift_ratio) *drift_ratio = s->drift_ratio;
    return HR_OK;
  }
  return HR_ERR_INVALID_ARGUMENT;
}

hr_status hr_speedup(const hr_pipeline* p, const char* method, double* fom_seconds, double* online_seconds,
                     double* speedup) {
  if (!p) return HR_ERR_NULL_HANDLE;
  if (!method) return HR_ERR_INVALID_ARGUMENT;
  if (!p->evaluation) return HR_ERR_MISSING_ARTIFACT;
  for (const auto& m : p->evaluation->timing.methods) {
    if (m.method != method) continue;
    if (fom_seconds) *fom_seconds = p->evaluation->timing.fom_seconds;
    if (online_seconds) *online_seconds = m.online_seconds;
    if (speedup) *speedup = m.speedup;
    return HR_OK;
  }
  return HR_ERR_INVALID_ARGUMENT;
}

hr_status hr_snapshots_open(const char* path, hr_snapshots** out, char* err_buf, size_t err_len) {
  if (!out) return HR_ERR_NULL_HANDLE;
  *out = nullptr;
  if (!path) return HR_ERR_INVALID_ARGUMENT;
  std::string error;
  hemoreduce::SnapshotMatrix m;
  const hr_status st = guard(&error, [&] { m = hemoreduce::read_snapshots(path); });
  if (st != HR_OK) {
    copy_message(error, err_buf, err_len);
    return st;
  }
  *out = new hr_snapshots{std::move(m)};
  return HR_OK;
}

void hr_snapshots_destroy(hr_snapshots* s) { delete s; }

hr_status hr_snapshots_shape(const hr_snapshots* s, size_t* rows, size_t* cols) {
  if (!s) return HR_ERR_NULL_HANDLE;
  if (rows) *rows = static_cast<size_t>(s->data.data.rows());
  if (cols) *cols = static_cast<size_t>(s->data.data.cols());
  return HR_OK;
}

hr_status hr_snapshots_copy(const hr_snapshots* s, double* buf, size_t len) {
  if (!s) return HR_ERR_NULL_HANDLE;
  const auto n = static_cast<size_t>(s->data.data.size());
  if (!buf || len < n) return HR_ERR_LENGTH_MISMATCH;
  if (n) std::memcpy(buf, s->data.data.data(), n * sizeof(double));
  return HR_OK;
}

hr_status hr_snapshots_times(const hr_snapshots* s, double* buf, size_t len) {
  if (!s) return HR_ERR_NULL_HANDLE;
  const size_t n = s->data.times.size();
  if (!buf || len < n) return HR_ERR_LENGTH_MISMATCH;
  if (n) std::memcpy(buf, s->data.times.data(), n * sizeof(double));
  return HR_OK;
}

}  // extern "C"
