/* C interface to the social-dilemma engine: opaque config handles, string
 * key/value configuration, and one entry point per command. Every function
 * returns a status code; ccc_last_error() describes the most recent failure
 * on the calling thread. */
#ifndef CCC_H
#define CCC_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ccc_status {
  CCC_OK = 0,
  CCC_ERR_CONTRACT = 1,    /* caller broke an API precondition */
  CCC_ERR_CONFIG = 2,      /* unknown key, bad value, unusable setting */
  CCC_ERR_IO = 3,          /* filesystem or serialization failure */
  CCC_ERR_DIVERGENCE = 4,  /* training left the numerically trusted region */
  CCC_ERR_UNSUPPORTED = 5, /* feature does not exist for this environment */
  CCC_ERR_PROPERTY = 6,    /* a verification suite found a violated property */
  CCC_ERR_INTERNAL = 7     /* unexpected failure; see ccc_last_error() */
} ccc_status;

/* Version tag embedded in all result files. Static storage; do not free. */
const char* ccc_version(void);

/* Message for the last failing call on this thread; empty string if none.
 * Valid until the next failing call on the same thread. */
const char* ccc_last_error(void);

/* Opaque run configuration. Starts fully defaulted (which is valid);
 * ccc_config_set rejects unknown keys. Keys are "section.key" strings, e.g.
 * "run.env", "train.scheme", "tournament.strategies". */
typedef struct ccc_config ccc_config;

ccc_config* ccc_config_new(void);
void ccc_config_free(ccc_config* cfg);
ccc_status ccc_config_set(ccc_config* cfg, const char* key, const char* value);
/* INI-style file: [section] headers, key = value lines, # comments. */
ccc_status ccc_config_load_file(ccc_config* cfg, const char* path);
/* Resolved config as INI text. Valid until the next call on this config. */
const char* ccc_config_serialize(ccc_config* cfg);

/* Commands. Each writes its result files plus a config.ini snapshot into
 * out_dir (created if needed) and is deterministic in the config. */
ccc_status ccc_run_train(const ccc_config* cfg, const char* out_dir);
ccc_status ccc_run_thresholds(const ccc_config* cfg, const char* out_dir);
ccc_status ccc_run_match(const ccc_config* cfg, const char* out_dir);
ccc_status ccc_run_tournament(const ccc_config* cfg, const char* out_dir);
/* CCC_ERR_PROPERTY when a binding property suite fails. */
ccc_status ccc_run_verify_theorem(const ccc_config* cfg, const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CCC_H */
