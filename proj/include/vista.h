#ifndef VISTA_H
#define VISTA_H

/* C interface to the vista trajectory-imputation library.
 *
 * Every handle is opaque and owned by the caller; release it with the
 * matching *_free function (NULL is accepted). Functions return a
 * vista_status; on failure vista_last_error() holds a message for the
 * calling thread until its next call into the library. Strings returned
 * through char** out-parameters are freed with vista_string_free. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define VISTA_API __attribute__((visibility("default")))
#else
#define VISTA_API
#endif

typedef enum vista_status {
    VISTA_OK = 0,
    VISTA_E_EMPTY_INPUT,
    VISTA_E_INVALID_PARAMETER,
    VISTA_E_IO,
    VISTA_E_CONFIG,
    VISTA_E_NOT_CANONICAL,
    VISTA_E_UNKNOWN_NODE,
    VISTA_E_EMPTY_CANDIDATES,
    VISTA_E_NO_CANDIDATES,
    VISTA_E_INCOMPATIBLE_SNAPSHOT,
    VISTA_E_INCOMPLETE_SEGMENT,
    VISTA_E_MALFORMED_ORACLE_OUTPUT,
    VISTA_E_EMPTY_ORACLE_OUTPUT,
    VISTA_E_ORACLE_TIMEOUT,
    VISTA_E_ORACLE_UNAVAILABLE,
    VISTA_E_TEMPLATE,
    VISTA_E_EVALUATION,
    VISTA_E_DEGENERATE_SPAN,
    VISTA_E_UNSUPPORTED_CONSTRUCT,
    VISTA_E_VALIDATION_EXHAUSTED,
    VISTA_E_MISSING_OUTCOME,
    VISTA_E_ANOMALY_DETECTED,
    VISTA_E_INTERNAL
} vista_status;

typedef struct vista_config vista_config;
typedef struct vista_dataset vista_dataset;
typedef struct vista_masks vista_masks;
typedef struct vista_kg vista_kg;

VISTA_API const char* vista_last_error(void);
VISTA_API const char* vista_status_name(vista_status status);
VISTA_API void vista_string_free(char* s);

/* --- configuration ------------------------------------------------------ */

VISTA_API vista_status vista_config_new(vista_config** out);
/* Reads a key = value file ('#' comments). */
VISTA_API vista_status vista_config_load(const char* path, vista_config** out);
/* Unknown key or bad value -> VISTA_E_CONFIG. */
VISTA_API vista_status vista_config_set(vista_config* config, const char* key, const char* value);
VISTA_API vista_status vista_config_validate(const vista_config* config);
VISTA_API void vista_config_free(vista_config* config);

/* --- AIS data ------------------------------------------------------------ */

VISTA_API vista_status vista_dataset_read_csv(const char* path, vista_dataset** out);
VISTA_API vista_status vista_dataset_write_csv(const vista_dataset* dataset, const char* path);
VISTA_API size_t vista_dataset_vessel_count(const vista_dataset* dataset);
VISTA_API size_t vista_dataset_record_count(const vista_dataset* dataset);
VISTA_API void vista_dataset_free(vista_dataset* dataset);

/* Block missingness over minimal segments of m records: each segment is
 * removed with probability removal_prob. Produces the masked dataset and the
 * masks. */
VISTA_API vista_status vista_mask_apply(const vista_dataset* dataset, size_t m, double removal_prob, uint64_t seed,
                                        vista_dataset** masked_out, vista_masks** masks_out);
VISTA_API vista_status vista_masks_read(const char* path, vista_masks** out);
VISTA_API vista_status vista_masks_write(const vista_masks* masks, const char* path);
VISTA_API size_t vista_masks_gap_count(const vista_masks* masks);
VISTA_API void vista_masks_free(vista_masks* masks);

/* --- knowledge graph ---------------------------------------------------- */

VISTA_API vista_status vista_kg_new(vista_kg** out);
/* Schema version mismatch -> VISTA_E_INCOMPATIBLE_SNAPSHOT. */
VISTA_API vista_status vista_kg_load(const char* path, vista_kg** out);
VISTA_API vista_status vista_kg_save(const vista_kg* kg, const char* path);
VISTA_API size_t vista_kg_node_count(const vista_kg* kg);
VISTA_API size_t vista_kg_edge_count(const vista_kg* kg);
/* DOT text of the subgraph induced by node_ids (count may be 0). */
VISTA_API vista_status vista_kg_export_dot(const vista_kg* kg, const uint64_t* node_ids, size_t count, char** dot_out);
VISTA_API void vista_kg_free(vista_kg* kg);

/* --- pipeline ----------------------------------------------------------- */

/* Extracts knowledge units from the complete segments of dataset into kg.
 * stats_json_out receives the run statistics even when the run fails after
 * scheduling; quarantine_path may be NULL. */
VISTA_API vista_status vista_build(const vista_dataset* dataset, vista_kg* kg, const vista_config* config,
                                   const char* quarantine_path, char** stats_json_out);

/* Imputes every gap of masks. Outcomes stream to outcomes_path as JSON
 * Lines. */
VISTA_API vista_status vista_impute(const vista_dataset* masked, const vista_masks* masks, const vista_kg* kg,
                                    const vista_config* config, const char* outcomes_path,
                                    const char* quarantine_path, char** stats_json_out);

/* Scores the outcomes file against truth on the masked records. With
 * with_baselines set the report also holds Lin-ITP, Akima and Kalman rows
 * computed on the masked dataset. Missing gaps -> VISTA_E_MISSING_OUTCOME. */
VISTA_API vista_status vista_evaluate(const vista_dataset* truth, const vista_dataset* masked,
                                      const vista_masks* masks, const char* outcomes_path,
                                      const vista_config* config, int with_baselines, char** report_json_out);

#ifdef __cplusplus
}
#endif

#endif
