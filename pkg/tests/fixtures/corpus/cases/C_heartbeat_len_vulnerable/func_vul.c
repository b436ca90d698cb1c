int dtls1_process_heartbeat(SSL *s)
{
    unsigned char *p = &s->s3->rrec.data[0], *pl;
    unsigned short hbtype;
    unsigned int payload;
    unsigned int padding = 16;

    hbtype = *p++;
    n2s(p, payload);
    pl = p;
    if (hbtype == 1) {
        unsigned char *buffer, *bp;
        buffer = OPENSSL_malloc(1 + 2 + payload + padding);
        bp = buffer;
        *bp++ = 2;
        s2n(payload, bp);
        memcpy(bp, pl, payload);
        dtls1_write_bytes(s, 24, buffer, 3 + payload + padding);
        OPENSSL_free(buffer);
    }
    return 0;
}
