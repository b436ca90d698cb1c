#define SSL_MKEY_RSA 0x00000001L
#define SSL_MKEY_DHE 0x00000008L
#define SSL_AD_UNEXPECTED_MESSAGE 10
#define SSL3_AL_FATAL 2
