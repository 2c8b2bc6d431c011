#ifndef HT_CONFIG_H
#define HT_CONFIG_H

/*
 * Build-time knobs for the hash table.
 *
 * HT_INITIAL_CAPACITY
 *     Bucket count used by ht_create. Must be a power of two; other
 *     values are rounded up by ht_create_with.
 *
 * HT_MAX_LOAD_NUM / HT_MAX_LOAD_DEN
 *     Maximum load factor as a fraction. The table doubles before an
 *     insert would exceed it. Integer arithmetic keeps the comparison
 *     exact: length * DEN > capacity * NUM.
 *
 * Changing these values changes iteration order and the statistics
 * printed by the demo, but never the stored contents.
 */

#define HT_INITIAL_CAPACITY 16
#define HT_MAX_LOAD_NUM 3
#define HT_MAX_LOAD_DEN 4

/*
 * Define HT_DEBUG to enable internal consistency checks after every
 * mutation. The checks walk the whole table, so they are quadratic over
 * a sequence of inserts.
 */

#endif
