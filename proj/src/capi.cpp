#include "ccc.h"

#include <exception>
#include <string>
#include <utility>

#include "ccc/errors.hpp"
#include "ccc/runner.hpp"
#include "ccc/version.hpp"

namespace {

thread_local std::string g_last_error;

template <typename F>
ccc_status guarded(F&& fn) {
  try {
    g_last_error.clear();
    return std::forward<F>(fn)();
  } catch (const ccc::ConfigError& e) {
    g_last_error = e.what();
    return CCC_ERR_CONFIG;
  } catch (const ccc::ContractError& e) {
    g_last_error = e.what();
    return CCC_ERR_CONTRACT;
  } catch (const ccc::IoError& e) {
    g_last_error = e.what();
    return CCC_ERR_IO;
  } catch (const ccc::DivergenceError& e) {
    g_last_error = e.what();
    return CCC_ERR_DIVERGENCE;
  } catch (const ccc::UnsupportedError& e) {
    g_last_error = e.what();
    return CCC_ERR_UNSUPPORTED;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CCC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return CCC_ERR_INTERNAL;
  }
}

ccc_status require(const void* p, const char* what) {
  if (p != nullptr) return CCC_OK;
  g_last_error = std::string(what) + " must not be null";
  return CCC_ERR_CONTRACT;
}

}  // namespace

struct ccc_config {
  ccc::RunConfig impl;
  std::string serialized;  // backing store for ccc_config_serialize
};

extern "C" {

const char* ccc_version(void) { return ccc::kVersionTag; }

const char* ccc_last_error(void) { return g_last_error.c_str(); }

ccc_config* ccc_config_new(void) { return new (std::nothrow) ccc_config(); }

void ccc_config_free(ccc_config* cfg) { delete cfg; }

ccc_status ccc_config_set(ccc_config* cfg, const char* key, const char* value) {
  if (const ccc_status s = require(cfg, "config"); s != CCC_OK) return s;
  if (const ccc_status s = require(key, "key"); s != CCC_OK) return s;
  if (const ccc_status s = require(value, "value"); s != CCC_OK) return s;
  return guarded([&] {
    cfg->impl.set(key, value);
    return CCC_OK;
  });
}

ccc_status ccc_config_load_file(ccc_config* cfg, const char* path) {
  if (const ccc_status s = require(cfg, "config"); s != CCC_OK) return s;
  if (const ccc_status s = require(path, "path"); s != CCC_OK) return s;
  return guarded([&] {
    cfg->impl.load_file(path);
    return CCC_OK;
  });
}

const char* ccc_config_serialize(ccc_config* cfg) {
  if (cfg == nullptr) return "";
  cfg->serialized = cfg->impl.serialize();
  return cfg->serialized.c_str();
}

#define CCC_DEFINE_RUN(api_name, runner_fn)                                      \
  ccc_status api_name(const ccc_config* cfg, const char* out_dir) {              \
    if (const ccc_status s = require(cfg, "config"); s != CCC_OK) return s;      \
    if (const ccc_status s = require(out_dir, "out_dir"); s != CCC_OK) return s; \
    return guarded([&] {                                                         \
      ccc::runner_fn(cfg->impl, out_dir);                                        \
      return CCC_OK;                                                             \
    });                                                                          \
  }

CCC_DEFINE_RUN(ccc_run_train, cmd_train)
CCC_DEFINE_RUN(ccc_run_thresholds, cmd_thresholds)
CCC_DEFINE_RUN(ccc_run_match, cmd_match)
CCC_DEFINE_RUN(ccc_run_tournament, cmd_tournament)

#undef CCC_DEFINE_RUN

ccc_status ccc_run_verify_theorem(const ccc_config* cfg, const char* out_dir) {
  if (const ccc_status s = require(cfg, "config"); s != CCC_OK) return s;
  if (const ccc_status s = require(out_dir, "out_dir"); s != CCC_OK) return s;
  return guarded([&]() -> ccc_status {
    if (!ccc::cmd_verify_theorem(cfg->impl, out_dir)) {
      g_last_error = "one or more theorem properties failed; see verify_theorem.json";
      return CCC_ERR_PROPERTY;
    }
    return CCC_OK;
  });
}

}  // extern "C"
