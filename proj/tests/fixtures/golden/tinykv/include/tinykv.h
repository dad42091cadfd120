#ifndef TINYKV_H
#define TINYKV_H

#define TINYKV_VERSION_MAJOR 0
#define TINYKV_VERSION_MINOR 3

typedef struct tkv tkv;

/* Verbosity of internal tracing; 0 disables it. */
extern int tkv_debug_level;

tkv *tkv_open(const char *path);
void tkv_close(tkv *db);

const char *tkv_get(tkv *db, const char *key);
int tkv_put(tkv *db, const char *key, const char *value);
int tkv_del(tkv *db, const char *key);

const char *tkv_version(void);

#endif
