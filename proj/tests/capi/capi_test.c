/* Exercises the C interface from C. Usage: capi_test <tracks.csv> <workdir> */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "vista.h"

static int failures = 0;

#define EXPECT(cond)                                                              \
    do {                                                                          \
        if (!(cond)) {                                                            \
            fprintf(stderr, "%s:%d: expected %s (%s)\n", __FILE__, __LINE__, #cond, \
                    vista_last_error());                                          \
            ++failures;                                                           \
        }                                                                         \
    } while (0)

static char path_buf[8][1024];

static const char* in_dir(int slot, const char* dir, const char* name) {
    snprintf(path_buf[slot], sizeof path_buf[slot], "%s/%s", dir, name);
    return path_buf[slot];
}

static double json_number(const char* json, const char* key) {
    char needle[128];
    snprintf(needle, sizeof needle, "\"%s\":", key);
    const char* p = strstr(json, needle);
    return p ? strtod(p + strlen(needle), NULL) : NAN;
}

static void test_status_names(void) {
    EXPECT(strcmp(vista_status_name(VISTA_OK), "OK") == 0);
    EXPECT(strcmp(vista_status_name(VISTA_E_CONFIG), "ConfigError") == 0);
    EXPECT(strcmp(vista_status_name(VISTA_E_MISSING_OUTCOME), "MissingOutcome") == 0);
    EXPECT(strcmp(vista_status_name(VISTA_E_ANOMALY_DETECTED), "AnomalyDetected") == 0);
    EXPECT(vista_status_name((vista_status)999) != NULL);
}

static void test_arguments(void) {
    EXPECT(vista_config_new(NULL) == VISTA_E_INVALID_PARAMETER);
    EXPECT(strlen(vista_last_error()) > 0);
    EXPECT(vista_dataset_read_csv(NULL, NULL) == VISTA_E_INVALID_PARAMETER);
    EXPECT(vista_dataset_vessel_count(NULL) == 0);
    vista_config_free(NULL);
    vista_dataset_free(NULL);
    vista_masks_free(NULL);
    vista_kg_free(NULL);
    vista_string_free(NULL);

    vista_dataset* d = NULL;
    EXPECT(vista_dataset_read_csv("/nonexistent/tracks.csv", &d) == VISTA_E_IO);
    EXPECT(d == NULL);
}

static void test_config(const char* work) {
    vista_config* c = NULL;
    EXPECT(vista_config_new(&c) == VISTA_OK);
    EXPECT(vista_config_set(c, "batch_size", "4") == VISTA_OK);
    EXPECT(vista_config_set(c, "no_such_key", "1") == VISTA_E_CONFIG);
    EXPECT(strstr(vista_last_error(), "no_such_key") != NULL);
    EXPECT(vista_config_set(c, "removal_prob", "2") == VISTA_OK);
    EXPECT(vista_config_validate(c) == VISTA_E_CONFIG);
    vista_config_free(c);

    const char* path = in_dir(0, work, "capi.conf");
    FILE* f = fopen(path, "w");
    EXPECT(f != NULL);
    if (!f) return;
    fputs("# test\nm = 20\nseed = 9\n", f);
    fclose(f);
    c = NULL;
    EXPECT(vista_config_load(path, &c) == VISTA_OK);
    EXPECT(vista_config_validate(c) == VISTA_OK);
    vista_config_free(c);
    EXPECT(vista_config_load("/nonexistent/x.conf", &c) == VISTA_E_CONFIG);
}

static void test_pipeline(const char* tracks, const char* work) {
    vista_dataset* truth = NULL;
    EXPECT(vista_dataset_read_csv(tracks, &truth) == VISTA_OK);
    EXPECT(vista_dataset_vessel_count(truth) == 3);
    EXPECT(vista_dataset_record_count(truth) == 300);

    vista_dataset* masked = NULL;
    vista_masks* masks = NULL;
    EXPECT(vista_mask_apply(truth, 20, 1.5, 7, &masked, &masks) == VISTA_E_INVALID_PARAMETER);
    EXPECT(vista_mask_apply(truth, 20, 0.0, 7, &masked, &masks) == VISTA_OK);
    EXPECT(vista_masks_gap_count(masks) == 0);
    vista_dataset_free(masked);
    vista_masks_free(masks);
    EXPECT(vista_mask_apply(truth, 20, 0.4, 7, &masked, &masks) == VISTA_OK);
    const size_t gaps = vista_masks_gap_count(masks);
    EXPECT(gaps > 0);

    /* Masks and datasets survive a round-trip through files. */
    const char* mask_path = in_dir(1, work, "capi_mask.json");
    EXPECT(vista_masks_write(masks, mask_path) == VISTA_OK);
    vista_masks* masks2 = NULL;
    EXPECT(vista_masks_read(mask_path, &masks2) == VISTA_OK);
    EXPECT(vista_masks_gap_count(masks2) == gaps);
    vista_masks_free(masks2);
    const char* masked_path = in_dir(2, work, "capi_masked.csv");
    EXPECT(vista_dataset_write_csv(masked, masked_path) == VISTA_OK);

    /* Build on the truth, then impute the masked copy. */
    vista_config* cfg = NULL;
    vista_config_new(&cfg);
    vista_kg* kg = NULL;
    EXPECT(vista_kg_new(&kg) == VISTA_OK);
    char* stats = NULL;
    EXPECT(vista_build(truth, kg, cfg, NULL, &stats) == VISTA_OK);
    EXPECT(stats != NULL && json_number(stats, "committed") == 15.0);
    vista_string_free(stats);
    EXPECT(vista_kg_node_count(kg) > 0);
    EXPECT(vista_kg_edge_count(kg) > 0);

    const char* kg_path = in_dir(3, work, "capi_kg.json");
    EXPECT(vista_kg_save(kg, kg_path) == VISTA_OK);
    vista_kg* kg2 = NULL;
    EXPECT(vista_kg_load(kg_path, &kg2) == VISTA_OK);
    EXPECT(vista_kg_node_count(kg2) == vista_kg_node_count(kg));

    char* dot = NULL;
    EXPECT(vista_kg_export_dot(kg2, NULL, 0, &dot) == VISTA_OK);
    EXPECT(dot != NULL && strstr(dot, "digraph") != NULL);
    vista_string_free(dot);
    const uint64_t bogus = 999999;
    dot = NULL;
    EXPECT(vista_kg_export_dot(kg2, &bogus, 1, &dot) == VISTA_E_UNKNOWN_NODE);
    EXPECT(dot == NULL);

    const char* out_path = in_dir(4, work, "capi_outcomes.jsonl");
    stats = NULL;
    EXPECT(vista_impute(masked, masks, kg2, cfg, out_path, NULL, &stats) == VISTA_OK);
    EXPECT(stats != NULL && json_number(stats, "committed") == (double)gaps);
    vista_string_free(stats);

    char* report = NULL;
    EXPECT(vista_evaluate(truth, masked, masks, out_path, cfg, 1, &report) == VISTA_OK);
    EXPECT(report != NULL);
    if (report) {
        EXPECT(json_number(report, "mae_lat") < 1e-9);
        EXPECT(json_number(report, "mhd_km") < 1e-6);
        EXPECT(strstr(report, "\"comparison\"") != NULL);
        EXPECT(strstr(report, "akima") != NULL);
    }
    vista_string_free(report);

    /* An outcomes file without the gaps is reported as missing. */
    const char* empty_path = in_dir(5, work, "capi_empty.jsonl");
    FILE* f = fopen(empty_path, "w");
    EXPECT(f != NULL);
    if (f) fclose(f);
    report = NULL;
    EXPECT(vista_evaluate(truth, NULL, masks, empty_path, NULL, 0, &report) == VISTA_E_MISSING_OUTCOME);

    /* Snapshot with a foreign schema version. */
    const char* bad_kg = in_dir(6, work, "capi_bad_kg.json");
    f = fopen(bad_kg, "w");
    EXPECT(f != NULL);
    if (f) {
        fputs("{\"schema_version\": 999}", f);
        fclose(f);
    }
    vista_kg* kg3 = NULL;
    EXPECT(vista_kg_load(bad_kg, &kg3) == VISTA_E_INCOMPATIBLE_SNAPSHOT);

    vista_kg_free(kg);
    vista_kg_free(kg2);
    vista_config_free(cfg);
    vista_masks_free(masks);
    vista_dataset_free(masked);
    vista_dataset_free(truth);
}

int main(int argc, char** argv) {
    if (argc != 3) {
        fprintf(stderr, "usage: %s <tracks.csv> <workdir>\n", argv[0]);
        return 2;
    }
    test_status_names();
    test_arguments();
    test_config(argv[2]);
    test_pipeline(argv[1], argv[2]);
    if (failures) {
        fprintf(stderr, "%d check(s) failed\n", failures);
        return 1;
    }
    printf("capi: all checks passed\n");
    return 0;
}
