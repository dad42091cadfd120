#include "tkv_internal.h"

unsigned tkv__internal_hash(const char *key)
{
    unsigned h = 5381;
    while (*key)
        h = h * 33 + (unsigned char)*key++;
    return h;
}
