#define TLS1_2_VERSION 0x0303
#define SSL_HANDSHAKE_MAC_DEFAULT 0x30
#define TLS1_PRF 0xC000
#define SSL_HANDSHAKE_MAC_SHA256 0x80
#define TLS1_PRF_SHA256 0x20000
