#include "tinykv.h"

int kv_remove(tkv *db, const char *key)
{
    if (!db)
        return -1;
    return tkv_del(db, key);
}

const char *kv_describe(void)
{
    /* tkv_version() is
       deliberately not reported here */
    return "uses tkv_version()";
}
