#ifndef OPENSPIN_OPENSPIN_H
#define OPENSPIN_OPENSPIN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define OSPIN_API __declspec(dllexport)
#else
#define OSPIN_API __attribute__((visibility("default")))
#endif

typedef enum ospin_status {
    OSPIN_OK = 0,
    OSPIN_ERROR = 1,        /* unexpected internal failure */
    OSPIN_BLOCKED = 2,      /* value needs data that is not available */
    OSPIN_PARSE = 3,
    OSPIN_DOMAIN = 4,
    OSPIN_CONSISTENCY = 5,  /* write-once conflict */
    OSPIN_SOLVER = 6,
    OSPIN_IO = 7,
    OSPIN_MISMATCH = 8,     /* check or compare found a disagreement */
    OSPIN_ARG = 9           /* null pointer or bad argument */
} ospin_status;

typedef struct ospin_engine ospin_engine;

/* Engine options. Closed tables must be known before the first evaluation. */
typedef struct ospin_options {
    int r, h, m;
    int sign;                         /* +1 or -1, sign of the no-internal value */
    int strict;                       /* unknown closed values become errors */
    const char* const* closed_tables; /* paths, may be NULL */
    size_t n_closed_tables;
} ospin_options;

OSPIN_API ospin_status ospin_engine_create(const ospin_options* opts, ospin_engine** out);
OSPIN_API void ospin_engine_destroy(ospin_engine* e);

/* Message of the last failing call on this engine, or on this thread when e is NULL. */
OSPIN_API const char* ospin_last_error(const ospin_engine* e);

/* Every string returned through a char** out-parameter is released with this. */
OSPIN_API void ospin_free_string(char* s);

/* Canonical form of a key string, and its theory parameters. */
OSPIN_API ospin_status ospin_canonical_key(const char* key, char** out, int* r, int* h, int* m);

OSPIN_API ospin_status ospin_load_cache(ospin_engine* e, const char* path);
OSPIN_API ospin_status ospin_save_cache(ospin_engine* e, const char* path);
OSPIN_API size_t ospin_cache_size(ospin_engine* e);

/* One result line: "<key> = n/d", "<key> = 0/1 (rule: ...)" or "<key> BLOCKED: ...".
   Returns OSPIN_OK or OSPIN_BLOCKED on success. */
OSPIN_API ospin_status ospin_eval(ospin_engine* e, const char* key, char** line);

/* Exact value as "n/d"; OSPIN_BLOCKED leaves *value untouched. */
OSPIN_API ospin_status ospin_value(ospin_engine* e, const char* key, char** value);

/* Primary table up to max_dim in cache format (blocked keys as '#' comments),
   plus a one-line summary. Returns OSPIN_OK even when keys are blocked. */
OSPIN_API ospin_status ospin_table(ospin_engine* e, int max_dim, char** table, char** summary);

/* TRR consistency over `samples` random descendant keys. OSPIN_MISMATCH on disagreement. */
OSPIN_API ospin_status ospin_check(ospin_engine* e, size_t samples, uint64_t seed, int max_dim, char** report);

/* Graph-sum comparison, h = 0 only. OSPIN_MISMATCH on disagreement. */
OSPIN_API ospin_status ospin_compare(ospin_engine* e, int max_dim, int primary_only, char** report);

/* Comparison graphs for l internals, k boundary points and descendants D, one per line. */
OSPIN_API ospin_status ospin_graphs(int l, int k, const int* D, char** out);

#ifdef __cplusplus
}
#endif

#endif
