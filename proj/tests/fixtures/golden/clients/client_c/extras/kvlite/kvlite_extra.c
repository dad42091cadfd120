#include <stdlib.h>

#include "kvlite.h"

void *kvlite_alloc(const char *path)
{
    (void)path;
    return calloc(1, 32);
}

int kvlite_store(void *db, const char *key, const char *value)
{
    (void)db;
    (void)key;
    (void)value;
    return 0;
}
